#!/usr/bin/python3
#
# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""Common code for test modules."""

import os
from pathlib import Path
import numpy
import pytest
from pepclibs.helperlibs import TestRunner
from transfitlibs import CensoredSample, Simulate
from transfittools.transfit import _Transfit, ToolInfo

# The commands that write to an output directory.
_OUTDIR_COMMANDS = ("simulate", "fit", "onestep", "bound", "diagnose")

def run_transfit(arguments, exp_exc=None):
    """
    Run transfit command and verify the outcome. The arguments are as follows:
     * arguments - the arguments to run the command with, e.g. 'fit --config cfg.yml -o tmpdir'.
     * exp_exc - the expected exception, by default, any exception is considered to be a failure.
                 But when set if the command did not raise the expected exception then the test is
                 considered to be a failure.
    """

    TestRunner.run_tool(_Transfit, ToolInfo.TOOLNAME, arguments, exp_exc=exp_exc)

class CmdLineRunner():
    """Class for running commandline commands."""

    def _has_outdir(self, cmd):
        """Check if 'cmd' command has 'outdir' -option."""

        return cmd in _OUTDIR_COMMANDS

    def command(self, cmd, arg=None, exp_exc=None):
        """
        Run commandline tool with arguments. Every run gets a new output directory, which is
        returned.
        """

        if not arg:
            arg = ""

        outdir = None
        if self._has_outdir(cmd) and self._tmpdir:
            self._runs += 1
            outdir = self._tmpdir / f"{cmd}-{self._runs}"
            arg += f" -o {outdir}"

        self._tool_runner(f"{cmd} {arg}", exp_exc=exp_exc)
        return outdir

    def __init__(self, toolname, tool_runner, tmpdir=None):
        """The constructor."""

        self._tmpdir = Path(tmpdir) if tmpdir else None
        self._tool_runner = tool_runner
        self._runs = 0

        tooldir = Path(__file__).parents[1].resolve() # pylint: disable=no-member
        testdataroot = tooldir / "tests" / "testdata"
        self._tool_path = tooldir / toolname
        assert self._tool_path.exists()

        self.good_paths = []
        self.bad_paths = []
        for dirpath, dirnames, _ in os.walk(testdataroot / toolname):
            if dirnames:
                continue
            if "good" in Path(dirpath).parts:
                self.good_paths.append(Path(dirpath))
            else:
                self.bad_paths.append(Path(dirpath))

        self.good_paths.sort()
        self.bad_paths.sort()

        assert self.good_paths
        assert self.bad_paths

class TransfitTest(CmdLineRunner):
    """Class for running tests for 'transfit'."""

    def __init__(self, tmpdir=None):
        """The constructor."""

        super().__init__("transfit", run_transfit, tmpdir)

@pytest.fixture
def tool(request, tmp_path_factory):
    """Common fixture to return test object for 'transfit'."""

    tmpdir = tmp_path_factory.mktemp(request.fixturename)
    return TransfitTest(tmpdir=tmpdir)

def simulate(model_spec, theta0, n, seed, censoring=None, covariates=None, gamma0=None):
    """Simulate a sample and return the '(sample, sim_config)' tuple."""

    cfg = {"model": model_spec, "theta0": list(theta0), "n": n, "seed": seed}
    if censoring:
        cfg["censoring"] = censoring
    if covariates:
        cfg["covariates"] = covariates
    if gamma0:
        cfg["gamma0"] = gamma0

    config = Simulate.SimConfig.from_dict(cfg)
    return CensoredSample.from_records(Simulate.simulate_sample(config)), config

def cox_oracle(x, delta, z, beta):
    """
    An independent implementation of the Cox partial likelihood with the Breslow treatment of ties.
    Return the '(loglik, score, information)' tuple at 'beta'.
    """

    x = numpy.asarray(x, dtype=float)
    delta = numpy.asarray(delta)
    z = numpy.asarray(z, dtype=float).reshape(x.shape[0], -1)
    beta = numpy.asarray(beta, dtype=float)

    loglik = 0.0
    score = numpy.zeros(z.shape[1])
    info = numpy.zeros((z.shape[1], z.shape[1]))

    for t in numpy.unique(x[delta == 1]):
        dead = (x == t) & (delta == 1)
        risk = x >= t
        zrisk = z[risk]
        weights = numpy.exp(zrisk @ beta)
        s0 = weights.sum()
        s1 = weights @ zrisk
        s2 = (zrisk.T * weights) @ zrisk
        deaths = dead.sum()

        loglik += float(numpy.sum(z[dead] @ beta)) - deaths * numpy.log(s0)
        score += z[dead].sum(axis=0) - deaths * s1 / s0
        info += deaths * (s2 / s0 - numpy.outer(s1, s1) / s0**2)

    return loglik, score, info

def cox_mle(x, delta, z, tol=1e-12, max_iter=100):
    """Maximize the Cox partial likelihood by Newton iterations, return the estimate."""

    z = numpy.asarray(z, dtype=float).reshape(len(x), -1)
    beta = numpy.zeros(z.shape[1])
    for _ in range(max_iter):
        _, score, info = cox_oracle(x, delta, z, beta)
        step = numpy.linalg.solve(info, score)
        beta = beta + step
        if numpy.max(numpy.abs(step)) < tol:
            return beta
    raise AssertionError("the Cox oracle did not converge")
