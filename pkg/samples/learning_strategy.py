"""Partial-information strategy and filter along one simulated path."""

import argparse
import os.path

import sys

sys.path.append("..")

DEFAULT_CONFIG = os.path.join(
    os.path.dirname(os.path.abspath(__file__)),
    "config",
    "bayes_two_exponentials.json",
)


def main(config, seed, time_steps):
    # [START bayes_reinsurance_learning_strategy]
    import dataclasses

    import bayes_reinsurance

    # TODO: Set config to a JSON run configuration with 2 to 4 ordered
    #       claim families.
    # config = "config/bayes_two_exponentials.json"

    run_config = bayes_reinsurance.load_config(config)
    spec = run_config.solver
    if time_steps is not None:
        spec = dataclasses.replace(spec, time_steps=time_steps)
    grid = bayes_reinsurance.value_iteration(
        run_config.params, run_config.mixture, spec
    )
    path = bayes_reinsurance.simulate_path(
        run_config.params,
        run_config.mixture,
        run_config.prior,
        grid.strategy(),
        seed=seed,
    )
    # [END bayes_reinsurance_learning_strategy]
    frame = path.to_frame()
    print("true family: {}".format(path.theta + 1))
    print(frame.iloc[:: max(1, len(frame) // 20)])
    return frame


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default=DEFAULT_CONFIG)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--time-steps", type=int)
    args = parser.parse_args()
    main(**vars(args))
