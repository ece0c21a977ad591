#!/usr/bin/python3
#
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""The standard python packaging script."""

import re
from setuptools import setup, find_packages

_TOOLNAMES = ["transfit"]

def get_version(filename):
    """Fetch the project version number."""

    with open(filename, "r", encoding="utf-8") as fobj:
        for line in fobj:
            matchobj = re.match(r'^VERSION = "(\d+.\d+.\d+)"$', line)
            if matchobj:
                return matchobj.group(1)
    return None

setup(
    name="transfit",
    description="Semiparametric transformation model estimation for right-censored data",
    author="transfit developers",
    python_requires=">=3.8",
    version=get_version("transfittools/transfit/ToolInfo.py"),
    scripts=_TOOLNAMES,
    packages=find_packages(exclude=["tests"]),
    install_requires=["pepc>=1.5.14", "numpy", "pandas", "scipy", "pyyaml", "colorama"],
    extras_require={"tests": ["pytest", "hypothesis"]},
    long_description="""This package provides transfit - a command-line tool for simulating
                        right-censored failure time data, and for estimating the parameter of
                        semiparametric transformation models with the efficient score.""",
    classifiers=[
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: BSD License",
        "Programming Language :: Python :: 3 :: Only",
        "Development Status :: 4 - Beta",
    ],
)
