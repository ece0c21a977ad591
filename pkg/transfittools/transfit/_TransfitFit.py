# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module includes the "fit" and "onestep" 'transfit' commands implementation.
"""

import logging
import numpy
from transfitlibs import Estimate, Score
from transfitlibs.datasetlibs import _CSV
from transfitlibs.helperlibs import Human
from transfitlibs.helperlibs.Exceptions import Error, ErrorSingular, ErrorSolver
from transfittools import _Common

_LOG = logging.getLogger()

RESULT_FILENAME = "result.yml"
GAMMA_FILENAME = "gamma.csv"

def _run(args, method):
    """Run the estimator 'method' ("z_estimator" or "one_step") and write the result files."""

    cfg = _Common.load_config(args.config)
    model = _Common.get_model(cfg)
    score_fn = Score.score_fn_from_spec(cfg.get("score"), model)
    opts = _Common.get_solver_opts(args, cfg)

    theta_init = None
    if getattr(args, "theta", None):
        theta_init = _Common.parse_theta(args.theta, model, "'--theta' value")
    elif cfg.get("theta_init") is not None:
        theta_init = _Common.parse_theta(cfg["theta_init"], model, "'theta_init' value")

    if method == "one_step" and theta_init is None:
        raise Error("the one-step estimator requires a preliminary estimate, use '--theta' or "
                    "'theta_init' in the configuration file")

    outdir = _Common.init_outdir(args.outdir, (RESULT_FILENAME, GAMMA_FILENAME))
    sample, simcfg = _Common.load_sample(args, cfg)

    result = {"toolname": args.toolname, "toolver": args.toolver, "method": method,
              "records": sample.n, "failures": int(numpy.sum(sample.delta))}
    if simcfg:
        result["seed"] = simcfg.seed
    else:
        result["data"] = str(args.data)
    result["config"] = cfg
    result["solver"] = opts

    try:
        if method == "one_step":
            fit = Estimate.one_step(sample, model, score_fn=score_fn, theta0_hat=theta_init,
                                    opts=opts)
        else:
            fit = Estimate.z_estimate(sample, model, score_fn=score_fn, theta_init=theta_init,
                                      opts=opts)
    except ErrorSolver as err:
        # Non-convergence and a singular V matrix leave the diagnostics behind.
        result["converged"] = False
        result["error"] = str(err)
        result["diagnostics"] = err.diagnostics
        _Common.dump_yaml(result, outdir / RESULT_FILENAME)
        raise

    result["converged"] = True
    result.update(fit.to_dict(level=opts["level"]))

    try:
        robust = Estimate.robust_covariance(sample, model, fit, score_fn=score_fn)
    except ErrorSingular as err:
        _LOG.warning("failed to compute the robust covariance:\n%s", err.indent(2))
    else:
        result["robust_cov"] = robust
        result["robust_se"] = numpy.sqrt(numpy.maximum(numpy.diag(robust), 0))

    _Common.dump_yaml(result, outdir / RESULT_FILENAME)
    _CSV.write_columns(outdir / GAMMA_FILENAME, {"t": fit.gamma_hat.grid,
                                                 "gamma": fit.gamma_hat.values})

    cis = Estimate.confidence_intervals(fit, opts["level"])
    _LOG.info("Estimates (%d iterations, score norm %.3g):\n%s", fit.iterations, fit.score_norm,
              Human.estimates2str(fit.theta_hat, fit.se, cis, opts["level"]))

def fit_command(args):
    """Implements the 'fit' command."""
    _run(args, "z_estimator")

def onestep_command(args):
    """Implements the 'onestep' command."""
    _run(args, "one_step")
