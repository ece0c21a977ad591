# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module includes the "diagnose" 'transfit' command implementation.
"""

import logging
import numpy
from transfitlibs import Empirical, Fredholm, MonteCarlo, Score, Simulate
from transfitlibs.datasetlibs import _CSV
from transfitlibs.helperlibs.Exceptions import ErrorBadConfig
from transfittools import _Common

_LOG = logging.getLogger()

DIAGNOSE_FILENAME = "diagnose.yml"
FUNCTIONALS_FILENAME = "functionals.csv"

# The interval function tables cost 'O(m^2)', they are only verified on grids up to this size.
PSI_TABLES_MAX = 500

def _get_reps(args, dcfg):
    """Return the count of orthogonality replicates."""

    reps = args.reps if args.reps is not None else dcfg.get("reps", 0)
    if isinstance(reps, bool) or not isinstance(reps, int) or reps < 0:
        raise ErrorBadConfig(f"bad replicates count '{reps}', should be a non-negative integer")
    return reps

def _volterra_check(funcs, d_f):
    """Return the sup-norm difference between the recursive and the explicit 'D[f]' forms."""

    explicit = Empirical.d_volterra(funcs, funcs.s_f, method="explicit").values
    return float(numpy.max(numpy.abs(explicit - d_f))) if d_f.size else 0.0

def _functionals_columns(ctx):
    """Return the columns of the functionals CSV file."""

    funcs = ctx.functionals
    columns = {"t": funcs.grid, "gamma": funcs.gamma, "dN": funcs.dN, "s1": funcs.s1,
               "e_lp": funcs.e_lp, "var_lp": funcs.var_lp, "dC": funcs.dC, "dB": funcs.dB,
               "logP0": funcs.logP0, "kappa": ctx.system.kappa_curve}
    for idx in range(ctx.phi.phi.shape[1]):
        columns[f"phi{idx + 1}"] = ctx.phi.phi[:, idx]
        columns[f"D{idx + 1}"] = ctx.phi.d_f[:, idx]
    return columns

def diagnose_command(args):
    """Implements the 'diagnose' command."""

    cfg = _Common.load_config(args.config)
    model = _Common.get_model(cfg)
    if "theta0" not in cfg:
        raise ErrorBadConfig("the 'diagnose' command requires 'theta0' in the configuration file")
    theta0 = _Common.parse_theta(cfg["theta0"], model, "'theta0' value")
    gamma0 = Simulate.GammaMap.from_spec(cfg.get("gamma0"))
    score_fn = Score.score_fn_from_spec(cfg.get("score"), model)
    opts = _Common.get_solver_opts(args, cfg)

    dcfg = cfg.get("diagnose") or {}
    reps = _get_reps(args, dcfg)
    if args.jobs < 1:
        raise ErrorBadConfig(f"bad jobs count '{args.jobs}', should be a positive integer")
    g_specs = dcfg.get("g")
    if reps and args.data:
        raise ErrorBadConfig("the Monte-Carlo orthogonality report requires simulated records, "
                             "it cannot be used with '--data'")

    outdir = _Common.init_outdir(args.outdir, (DIAGNOSE_FILENAME, FUNCTIONALS_FILENAME))
    sample, simcfg = _Common.load_sample(args, cfg)

    ctx, out = Score.score(sample, model, theta0, score_fn=score_fn, gamma_tol=opts["gamma_tol"],
                           gamma_max_iter=opts["gamma_max_iter"])
    system = ctx.system
    gres = float(numpy.max(numpy.abs(ctx.gamma_check.values - ctx.gamma.values)))

    report = {"toolname": args.toolname, "toolver": args.toolver, "records": sample.n,
              "failures": int(numpy.sum(sample.delta)), "grid_size": int(system.grid.shape[0]),
              "theta0": theta0, "score": out.u, "sigma1": out.sigma1, "sigma2": out.sigma2,
              "sigma0": out.sigma0, "v": out.v, "v_cond": out.v_cond,
              "sigma0_cond": Score.condition_number(out.sigma0), "kappa": system.kappa,
              "kernel_l2": Fredholm.kernel_l2_surrogate(system),
              "fredholm": {"residual": ctx.phi.residual, "route": ctx.phi.route},
              "volterra_max_diff": _volterra_check(ctx.functionals, ctx.phi.d_f),
              "gamma_residual": gres}

    if system.grid.shape[0] <= PSI_TABLES_MAX:
        report["psi_identities"] = Fredholm.psi_identity_errors(system)
    else:
        report["psi_identities"] = f"skipped, the grid has more than {PSI_TABLES_MAX} points"

    if reps:
        report["orthogonality"] = MonteCarlo.orthogonality(simcfg, reps, jobs=args.jobs,
                                                           g_specs=g_specs, opts=opts)
    else:
        report["orthogonality"] = Score.nuisance_orthogonality_check(
                                        sample, model, theta0, gamma0, g_specs=g_specs,
                                        score_fn=score_fn, gamma_tol=opts["gamma_tol"],
                                        gamma_max_iter=opts["gamma_max_iter"])

    if simcfg:
        report["seed"] = simcfg.seed
    else:
        report["data"] = str(args.data)
    report["config"] = cfg

    _Common.dump_yaml(report, outdir / DIAGNOSE_FILENAME)
    _CSV.write_columns(outdir / FUNCTIONALS_FILENAME, _functionals_columns(ctx))

    _LOG.info("Score at theta0: %s, Fredholm residual %.3g (%s), kappa %.6g",
              numpy.array2string(out.u, precision=6), ctx.phi.residual, ctx.phi.route,
              system.kappa)
