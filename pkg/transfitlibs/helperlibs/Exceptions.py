# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the exception classes used by the 'transfit' project. The generic exceptions
come from 'pepc', this module adds the numerical and data-validation ones on top.
"""

# pylint: disable=wildcard-import,unused-wildcard-import
from pepclibs.helperlibs.Exceptions import *
from pepclibs.helperlibs.Exceptions import Error

class ErrorBadConfig(Error):
    """Invalid model, simulation, score or solver configuration."""

class ErrorBadData(Error):
    """Invalid censored records."""

class ErrorEmptyInput(ErrorBadData):
    """No records at all."""

class ErrorNoFailures(ErrorBadData):
    """Records without a single observed failure."""

class ErrorBadTime(ErrorBadData):
    """A NaN, infinite or negative withdrawal time."""

class ErrorOutOfBox(Error):
    """A covariate or a parameter outside of the declared box."""

class ErrorOverflow(Error):
    """The 'log P(0, t)' values are too large to be exponentiated safely."""

class ErrorSolver(Error):
    """
    A numerical solver failure. The 'diagnostics' attribute is a dictionary describing where and how
    the solver gave up.
    """

    def __init__(self, msg, diagnostics=None):
        """
        The class constructor. The arguments are as follows.
          * msg - the error message.
          * diagnostics - a dictionary with the solver state at the time of the failure.
        """

        super().__init__(msg)
        self.diagnostics = diagnostics if diagnostics is not None else {}

class ErrorSingular(ErrorSolver):
    """A singular or ill-conditioned matrix."""

class ErrorNotConverged(ErrorSolver):
    """Numerical non-convergence."""
