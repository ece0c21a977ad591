#!/usr/bin/python3
#
# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This configuration file adds the '--mc-scale' option, to allow user to run the slow Monte-Carlo
tests.
"""

def pytest_addoption(parser):
    """Add custom pytest options."""

    text = """Scale of the Monte-Carlo tests: the fraction of the full replicate counts to run. The
              default is 0, which skips the Monte-Carlo tests."""
    parser.addoption("--mc-scale", type=float, default=0.0, help=text)

def pytest_generate_tests(metafunc):
    """Run tests for the custom options."""

    if "mc_scale" in metafunc.fixturenames:
        metafunc.parametrize("mc_scale", [metafunc.config.getoption("mc_scale")])
