# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the Monte-Carlo experiments that check the large-sample behavior of the
estimators: the score central limit theorem, the confidence interval coverage, the one-step
estimator equivalence, the nuisance orthogonality and the 'kappa' plateau.

Replicate 'r' of an experiment uses seed 'r' of 'replicate_seeds()', so the results do not depend on
the worker count or on the scheduling order.
"""

import logging
import multiprocessing
import numpy
from transfitlibs import CensoredSample, Empirical, Estimate, Score, Simulate
from transfitlibs.Fredholm import build_system
from transfitlibs._ProgressLine import ReplicatesProgressLine
from transfitlibs.helperlibs.Exceptions import Error, ErrorNotConverged, ErrorSingular

_LOG = logging.getLogger()

def replicate_seeds(seed, reps):
    """Return the list of 'reps' 64-bit replicate seeds derived from the experiment seed 'seed'."""

    state = numpy.random.SeedSequence(seed).generate_state(reps, dtype=numpy.uint64)
    return [int(val) for val in state]

def _simulate(config, seed, n=None):
    """Simulate a sample and return it as a 'CensoredSample' object."""

    frame = Simulate.simulate_sample(config.with_seed(seed, n=n))
    return CensoredSample.from_records(frame)

def run_replicates(func, tasks, jobs=1, label="Replicates"):
    """
    Run 'func' for every task in 'tasks' and return the list of results in the task order. The
    arguments are as follows.
      * func - a module-level function of a single task argument. It returns 'None' for a failed
               replicate.
      * tasks - list of task objects.
      * jobs - count of worker processes, 1 means running in this process.
      * label - the progress line label.
    """

    if jobs < 1:
        raise Error(f"bad jobs count {jobs}, should be a positive integer")

    progress = ReplicatesProgressLine(len(tasks), label=label)
    progress.start()

    results = []
    failed = 0

    def account(res):
        """Store a result and update the progress line."""

        nonlocal failed
        results.append(res)
        if res is None:
            failed += 1
        progress.update(len(results), failed=failed)

    if jobs == 1 or len(tasks) < 2:
        for task in tasks:
            account(func(task))
    else:
        with multiprocessing.Pool(processes=jobs) as pool:
            for res in pool.imap(func, tasks):
                account(res)

    progress.update(len(results), failed=failed, final=True)
    _LOG.debug("%s: %d replicates in %.1f seconds, %d failed",
               label, len(results), progress.get_duration(), failed)
    return results

def _clt_replicate(task):
    """Run one score CLT replicate: return 'sqrt(n) U_n(theta0)' and 'Sigma0'."""

    config, seed, opts = task
    sample = _simulate(config, seed)
    try:
        _, out = Score.score(sample, config.model, config.theta0, gamma_tol=opts["gamma_tol"],
                             gamma_max_iter=opts["gamma_max_iter"])
    except (ErrorNotConverged, ErrorSingular) as err:
        _LOG.debug("score CLT replicate with seed %d failed:\n%s", seed, err)
        return None
    return numpy.sqrt(sample.n) * out.u, out.sigma0

def score_clt(config, reps, jobs=1, opts=None):
    """
    Check the central limit theorem of the score at the true parameter. Simulate 'reps' samples
    from 'config' (a 'SimConfig' object), and compare the Monte-Carlo mean and covariance of
    'sqrt(n) U_n(theta0)' with 0 and the average plug-in 'Sigma0'. Return the report dictionary.
    """

    opts = Estimate.solver_opts(opts)
    tasks = [(config, seed, opts) for seed in replicate_seeds(config.seed, reps)]
    results = [res for res in run_replicates(_clt_replicate, tasks, jobs, "Score CLT") if res]
    if len(results) < 2:
        raise Error("too few successful score CLT replicates")

    scores = numpy.array([res[0] for res in results])
    sigma0 = numpy.mean([res[1] for res in results], axis=0)
    mean = numpy.mean(scores, axis=0)
    stderr = numpy.std(scores, axis=0, ddof=1) / numpy.sqrt(scores.shape[0])
    cov = numpy.atleast_2d(numpy.cov(scores, rowvar=False))
    rel = float(numpy.linalg.norm(cov - sigma0) / max(numpy.linalg.norm(sigma0), 1e-300))

    return {"replicates": len(results), "failed": reps - len(results),
            "mean": mean.tolist(), "se": stderr.tolist(),
            "mean_within_3se": bool(numpy.all(numpy.abs(mean) <= 3 * stderr)),
            "mc_cov": cov.tolist(), "sigma0": sigma0.tolist(), "cov_rel_error": rel}

def _fit_replicate(task):
    """Run one estimation replicate: return the estimate and the confidence intervals."""

    config, seed, opts = task
    sample = _simulate(config, seed)
    try:
        fit = Estimate.z_estimate(sample, config.model, opts=opts)
    except (ErrorNotConverged, ErrorSingular) as err:
        _LOG.debug("estimation replicate with seed %d failed:\n%s", seed, err)
        return None
    return fit.theta_hat, Estimate.confidence_intervals(fit, opts["level"])

def coverage(config, reps, jobs=1, opts=None):
    """
    Check the consistency of the Z-estimator and the coverage of its confidence intervals. Return
    the report dictionary with the Monte-Carlo mean of the estimates, its standard error and the
    coverage fraction of every component.
    """

    opts = Estimate.solver_opts(opts)
    tasks = [(config, seed, opts) for seed in replicate_seeds(config.seed, reps)]
    results = [res for res in run_replicates(_fit_replicate, tasks, jobs, "Coverage") if res]
    if len(results) < 2:
        raise Error("too few successful estimation replicates")

    thetas = numpy.array([res[0] for res in results])
    cis = numpy.array([res[1] for res in results])
    theta0 = config.theta0
    covered = (cis[:, :, 0] <= theta0) & (theta0 <= cis[:, :, 1])
    mean = numpy.mean(thetas, axis=0)
    stderr = numpy.std(thetas, axis=0, ddof=1) / numpy.sqrt(thetas.shape[0])

    return {"replicates": len(results), "failed": reps - len(results), "level": opts["level"],
            "theta0": theta0.tolist(), "mean": mean.tolist(), "se": stderr.tolist(),
            "mean_within_3se": bool(numpy.all(numpy.abs(mean - theta0) <= 3 * stderr)),
            "coverage": numpy.mean(covered, axis=0).tolist()}

def _one_step_replicate(task):
    """Run one one-step equivalence replicate: return 'sqrt(n) |one-step - Z-estimate|'."""

    config, seed, n, shift, opts = task
    sample = _simulate(config, seed, n=n)
    prelim = config.theta0 + shift / numpy.sqrt(n)
    try:
        zfit = Estimate.z_estimate(sample, config.model, theta_init=config.theta0, opts=opts)
        ofit = Estimate.one_step(sample, config.model, theta0_hat=prelim, opts=opts)
    except (ErrorNotConverged, ErrorSingular) as err:
        _LOG.debug("one-step replicate with seed %d failed:\n%s", seed, err)
        return None
    return float(numpy.sqrt(n) * numpy.max(numpy.abs(ofit.theta_hat - zfit.theta_hat)))

def one_step_equivalence(config, sizes, reps, jobs=1, shift=1.0, opts=None):
    """
    Compare the one-step estimator started at 'theta0 + shift / sqrt(n)' with the Z-estimator for
    every sample size in 'sizes'. Return the report dictionary with the median of
    'sqrt(n) |one-step - Z-estimate|' per sample size.
    """

    opts = Estimate.solver_opts(opts)
    shift = numpy.broadcast_to(numpy.asarray(shift, dtype=float), config.theta0.shape)
    medians = []
    failed = []
    for n in sizes:
        seeds = replicate_seeds([config.seed, int(n)], reps)
        tasks = [(config, seed, n, shift, opts) for seed in seeds]
        results = [res for res in run_replicates(_one_step_replicate, tasks, jobs,
                                                 f"One-step n={n}") if res is not None]
        if not results:
            raise Error(f"all one-step replicates failed for sample size {n}")
        medians.append(float(numpy.median(results)))
        failed.append(reps - len(results))

    decreasing = all(nxt < cur for cur, nxt in zip(medians, medians[1:]))
    return {"sizes": [int(n) for n in sizes], "median_scaled_diff": medians, "failed": failed,
            "decreasing": decreasing}

def _orthogonality_replicate(task):
    """Run one orthogonality replicate: return the sums of the products and of their squares."""

    config, seed, g_specs, opts = task
    sample = _simulate(config, seed)
    directions = Score.directions_from_spec(g_specs, sample)
    try:
        prods = Score.orthogonality_products(sample, config.model, config.theta0, config.gamma0,
                                             directions, gamma_tol=opts["gamma_tol"],
                                             gamma_max_iter=opts["gamma_max_iter"])
    except (ErrorNotConverged, ErrorSingular) as err:
        _LOG.debug("orthogonality replicate with seed %d failed:\n%s", seed, err)
        return None
    names = [direction.name for direction in directions]
    return numpy.sum(prods, axis=0), numpy.sum(prods**2, axis=0), prods.shape[0], names

def orthogonality(config, reps, jobs=1, g_specs=None, opts=None):
    """
    Pool the score and nuisance score products over 'reps' simulated samples and return the
    orthogonality report (see 'Score.orthogonality_report()').
    """

    opts = Estimate.solver_opts(opts)
    tasks = [(config, seed, g_specs, opts) for seed in replicate_seeds(config.seed, reps)]
    results = [res for res in run_replicates(_orthogonality_replicate, tasks, jobs,
                                             "Orthogonality") if res]
    if not results:
        raise Error("all orthogonality replicates failed")

    total = sum(res[0] for res in results)
    total_sq = sum(res[1] for res in results)
    count = sum(res[2] for res in results)
    report = Score.orthogonality_report_from_moments(total, total_sq, count, results[0][3])
    report["replicates"] = len(results)
    report["failed"] = reps - len(results)
    return report

def kappa_curve(sample, model, theta, gamma=None, opts=None):
    """
    Return the '(grid, kappa)' tuple: the event grid and the 'kappa(t) = int_(0,t] c db' curve at
    'theta'. The transformation is fitted if 'gamma' is 'None'.
    """

    opts = Estimate.solver_opts(opts)
    if gamma is None:
        gamma = Empirical.fit_gamma(sample, model, theta, tol=opts["gamma_tol"],
                                    max_iter=opts["gamma_max_iter"])
    funcs = Empirical.conditional_moments(sample, model, gamma, theta)
    system = build_system(funcs)
    return funcs.grid, system.kappa_curve

def kappa_plateau(config, n=100000, quantile=0.95, opts=None):
    """
    Simulate a single large sample and check that the 'kappa' curve at the true parameters reaches
    a plateau: the increase of 'kappa' past the 'quantile' quantile of the event times is compared
    with the final value. Return the report dictionary.
    """

    sample = _simulate(config, config.seed, n=n)
    gamma = config.gamma0(sample.event_times)
    grid, curve = kappa_curve(sample, config.model, config.theta0, gamma=gamma, opts=opts)

    tq = float(numpy.quantile(grid, quantile))
    kq = float(curve[numpy.searchsorted(grid, tq, side="right") - 1])
    kmax = float(curve[-1])
    rel = (kmax - kq) / kmax if kmax > 0 else 0.0
    return {"n": n, "quantile": quantile, "t_quantile": tq, "t_max": float(grid[-1]),
            "kappa_quantile": kq, "kappa_max": kmax, "relative_increase": rel,
            "plateau": bool(rel <= 0.05)}
