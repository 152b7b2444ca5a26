"""Complete-information strategy across claim thresholds."""

import argparse
import os.path

import sys

sys.path.append("..")

DEFAULT_CONFIG = os.path.join(
    os.path.dirname(os.path.abspath(__file__)),
    "config",
    "threshold_sweep.json",
)


def main(config, out):
    # [START bayes_reinsurance_full_information_sweep]
    import bayes_reinsurance
    from bayes_reinsurance.cli import run_threshold_sweep

    # TODO: Set config to a JSON run configuration with one claim family.
    # config = "config/threshold_sweep.json"

    run_config = bayes_reinsurance.load_config(config)
    result = run_threshold_sweep(run_config, out, assert_golden=True)
    # [END bayes_reinsurance_full_information_sweep]
    print(result.frame[["L", "xi_star", "b_star", "regime"]])
    print("investment changes sign at L={}".format(result.zero_crossing))
    return result


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default=DEFAULT_CONFIG)
    parser.add_argument("--out")
    args = parser.parse_args()
    main(**vars(args))
