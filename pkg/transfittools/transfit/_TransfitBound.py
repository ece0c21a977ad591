# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module includes the "bound" 'transfit' command implementation.
"""

import logging
import numpy
from transfitlibs import Fredholm, Score
from transfitlibs.datasetlibs import _CSV
from transfitlibs.helperlibs.Exceptions import ErrorBadConfig
from transfittools import _Common

_LOG = logging.getLogger()

BOUND_FILENAME = "bound.yml"
CURVES_FILENAME = "bound.csv"

def bound_command(args):
    """Implements the 'bound' command."""

    cfg = _Common.load_config(args.config)
    model = _Common.get_model(cfg)
    if "theta0" not in cfg:
        raise ErrorBadConfig("the 'bound' command requires 'theta0' in the configuration file")
    theta = _Common.parse_theta(cfg["theta0"], model, "'theta0' value")
    opts = _Common.get_solver_opts(args, cfg)

    outdir = _Common.init_outdir(args.outdir, (BOUND_FILENAME, CURVES_FILENAME))
    sample, simcfg = _Common.load_sample(args, cfg, n=cfg.get("n", _Common.BOUND_SAMPLE_SIZE))

    # For simulated records the population quantities are computed at the true transformation.
    gamma = None
    if simcfg:
        gamma = simcfg.gamma0(sample.event_times)

    ctx, out = Score.score(sample, model, theta, gamma=gamma, gamma_tol=opts["gamma_tol"],
                           gamma_max_iter=opts["gamma_max_iter"])

    bound = Score.information_bound(out.sigma0)
    if bound is None:
        _LOG.warning("'Sigma0' is singular, the information bound is infinite")
        bound = "inf"

    funcs = ctx.functionals
    system = ctx.system
    result = {"toolname": args.toolname, "toolver": args.toolver, "records": sample.n,
              "theta": theta, "gamma_source": "true" if simcfg else "fitted",
              "sigma0": out.sigma0, "sigma1": out.sigma1, "sigma2": out.sigma2,
              "information_bound": bound, "kappa": system.kappa,
              "kernel_l2": Fredholm.kernel_l2_surrogate(system), "v_cond": out.v_cond,
              "config": cfg}
    if simcfg:
        result["seed"] = simcfg.seed
    else:
        result["data"] = str(args.data)

    # The resolvent diagonal in the original scale, "Delta(t, t) = P(0, t)^2 R(t, t)".
    idx = numpy.arange(funcs.grid.shape[0])
    rdiag = numpy.exp(2 * funcs.logP0) * Fredholm.resolvent(system, idx, idx)

    _Common.dump_yaml(result, outdir / BOUND_FILENAME)
    _CSV.write_columns(outdir / CURVES_FILENAME,
                       {"t": funcs.grid, "gamma": funcs.gamma, "C": funcs.C.values,
                        "B": funcs.B.values, "c": system.c, "b": system.b,
                        "kappa": system.kappa_curve, "psi1_from0": system.psi1_from0,
                        "psi0_to_end": system.psi0_to_end, "resolvent_diag": rdiag})

    _LOG.info("kappa(tau0) = %.6g, information bound:\n%s", system.kappa, bound)
