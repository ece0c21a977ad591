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
Test module for the Monte-Carlo experiments. The large experiments are slow and run only with the
'--mc-scale' option, e.g. '--mc-scale 1' runs the full replicate counts.
"""

import pytest
from transfitlibs import MonteCarlo, Simulate
from transfitlibs.helperlibs.Exceptions import Error

_CFG = {"model": {"family": "odds_ratio", "eta": 1, "dim_theta": 1},
        "theta0": [1.0],
        "covariates": {"law": "uniform", "low": -1, "high": 1},
        "censoring": {"type": "independent_with_atom", "tau0": 3.0, "atom": 0.3},
        "n": 2000,
        "seed": 1}

# The full replicate count of the Monte-Carlo experiments.
_REPS = 500

def _square(val):
    """Return the square of 'val'."""
    return val * val

def _reps(mc_scale):
    """Return the replicate count for Monte-Carlo scale 'mc_scale', skip the test for scale 0."""

    if not mc_scale > 0:
        pytest.skip("Monte-Carlo tests are disabled, use '--mc-scale' to enable them")
    return max(20, int(_REPS * mc_scale))

def test_replicate_seeds():
    """Test that the replicate seeds depend only on the experiment seed."""

    seeds = MonteCarlo.replicate_seeds(5, 10)
    assert len(seeds) == 10
    assert len(set(seeds)) == 10
    assert MonteCarlo.replicate_seeds(5, 4) == seeds[:4]
    assert MonteCarlo.replicate_seeds(6, 4) != seeds[:4]
    assert all(0 <= seed < 2**64 for seed in seeds)

def test_run_replicates():
    """Test that the results are in the task order regardless of the worker count."""

    tasks = list(range(10))
    expected = [val * val for val in tasks]
    assert MonteCarlo.run_replicates(_square, tasks, jobs=1) == expected
    assert MonteCarlo.run_replicates(_square, tasks, jobs=3) == expected

    with pytest.raises(Error):
        MonteCarlo.run_replicates(_square, tasks, jobs=0)

def test_parallel_determinism():
    """Test that a small experiment gives the same report with one and with two workers."""

    config = Simulate.SimConfig.from_dict(_CFG, n=200)
    first = MonteCarlo.orthogonality(config, 3, jobs=1)
    second = MonteCarlo.orthogonality(config, 3, jobs=2)
    assert first == second

def test_score_clt(mc_scale):
    """Test the score central limit theorem and the plug-in covariance at the true parameter."""

    config = Simulate.SimConfig.from_dict(_CFG)
    report = MonteCarlo.score_clt(config, _reps(mc_scale), jobs=4)

    assert report["failed"] <= 0.01 * report["replicates"]
    assert report["mean_within_3se"], report
    assert report["cov_rel_error"] <= 0.15, report

def test_coverage(mc_scale):
    """Test the estimator consistency and the confidence interval coverage."""

    config = Simulate.SimConfig.from_dict(_CFG)
    report = MonteCarlo.coverage(config, _reps(mc_scale), jobs=4)

    assert report["mean_within_3se"], report
    # The interval is wider with fewer replicates.
    slack = 0.025 / min(1.0, mc_scale)**0.5
    assert 0.92 - slack <= report["coverage"][0] <= 0.975 + slack, report

def test_one_step_equivalence(mc_scale):
    """Test that the one-step estimator approaches the Z-estimator with the sample size."""

    config = Simulate.SimConfig.from_dict(_CFG)
    report = MonteCarlo.one_step_equivalence(config, [500, 2000, 8000], _reps(mc_scale), jobs=4)
    assert report["decreasing"], report

def test_orthogonality(mc_scale):
    """Test that the efficient score is orthogonal to the nuisance scores."""

    config = Simulate.SimConfig.from_dict(_CFG)
    # 500 replicates of 2000 records is the total sample of 10^6.
    report = MonteCarlo.orthogonality(config, _reps(mc_scale), jobs=4)

    assert set(report["directions"]) == {"constant", "indicator_median"}
    for name, entry in report["directions"].items():
        assert entry["within_3se"], (name, entry)

def test_kappa_plateau(mc_scale):
    """Test that the 'kappa' curve reaches a plateau under the Koziol-Green censoring."""

    _reps(mc_scale)
    cfg = dict(_CFG, censoring={"type": "koziol_green", "a": 1.0})
    config = Simulate.SimConfig.from_dict(cfg)
    n = max(5000, int(100000 * min(1.0, mc_scale)))

    report = MonteCarlo.kappa_plateau(config, n=n)
    assert report["kappa_max"] > 0
    assert report["plateau"], report
