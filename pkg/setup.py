#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os.path

from setuptools import find_packages, setup

NAME = "bayes-reinsurance"


def readme():
    with open("README.rst") as f:
        return f.read()


def version():
    namespace = {}
    path = os.path.join("bayes_reinsurance", "_version.py")
    with open(path) as f:
        exec(f.read(), namespace)
    return namespace["__version__"]


INSTALL_REQUIRES = [
    "setuptools",
    "numpy>=1.20",
    "pandas>=1.3.0",
    "scipy>=1.7",
    "jsonschema>=3.2",
]

EXTRAS_REQUIRE = {
    "plot": ["matplotlib>=3.4"],
}

setup(
    name=NAME,
    version=version(),
    description=(
        "Optimal investment and proportional reinsurance under Bayesian "
        "learning of the claim size distribution"
    ),
    long_description=readme(),
    license="BSD License",
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="insurance reinsurance stochastic-control bayesian",
    install_requires=INSTALL_REQUIRES,
    extras_require=EXTRAS_REQUIRE,
    python_requires=">=3.8",
    packages=find_packages(exclude=["tests*", "samples*"]),
    entry_points={
        "console_scripts": [
            "bayes-reinsurance = bayes_reinsurance.cli:main",
        ],
    },
    test_suite="tests",
)
