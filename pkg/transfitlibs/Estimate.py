# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the parameter estimators: the Z-estimator solving 'U_n(f, theta) = 0' by damped
Newton iterations, the one-step estimator, the plug-in covariance and the confidence intervals.
"""

import logging
import numpy
import scipy.stats
from transfitlibs import Score
from transfitlibs.helperlibs.Exceptions import (Error, ErrorBadConfig, ErrorNotConverged,
                                                ErrorOutOfBox, ErrorSingular)

_LOG = logging.getLogger()

# The default solver options.
DEFAULT_OPTS = {"tol": 1e-8, "max_iter": 50, "trust_radius": 1.0, "gamma_tol": 1e-10,
                "gamma_max_iter": 200, "level": 0.95}
# Maximum count of step halvings in a single Newton iteration.
_MAX_HALVINGS = 30

def solver_opts(opts=None):
    """
    Merge solver options dictionary 'opts' with the defaults, validate the result and return it.
    """

    res = dict(DEFAULT_OPTS)
    if not opts:
        return res

    unknown = set(opts) - set(DEFAULT_OPTS)
    if unknown:
        raise ErrorBadConfig(f"unknown solver option(s): {', '.join(sorted(unknown))}, use: "
                             f"{', '.join(DEFAULT_OPTS)}")

    for key, val in opts.items():
        if val is None:
            continue
        try:
            val = int(val) if key in ("max_iter", "gamma_max_iter") else float(val)
        except (TypeError, ValueError):
            raise ErrorBadConfig(f"bad solver option '{key}' value '{val}'") from None
        res[key] = val

    for key in ("tol", "trust_radius", "gamma_tol"):
        if not res[key] > 0:
            raise ErrorBadConfig(f"bad solver option '{key}' value {res[key]}, should be positive")
    for key in ("max_iter", "gamma_max_iter"):
        if res[key] < 1:
            raise ErrorBadConfig(f"bad solver option '{key}' value {res[key]}, should be a "
                                 f"positive integer")
    if not 0 < res["level"] < 1:
        raise ErrorBadConfig(f"bad confidence level {res['level']}, should be in (0, 1)")
    return res

class FitResult:
    """
    The estimation result. The public attributes are as follows.
      * theta_hat - the estimate.
      * gamma_hat - the fitted transformation at 'theta_hat'.
      * cov_theta - the covariance estimate 'V^-1 Sigma0 V^-T / n'.
      * se - the standard errors.
      * score_norm - the sup-norm of the score at 'theta_hat'.
      * iterations - the Newton iteration count (1 for the one-step estimator).
      * method - "z_estimator" or "one_step".
      * diagnostics - dictionary with 'kappa', the Fredholm residual and solver route, the 'V'
                      condition number, and the transformation fixed-point residual.
      * context, output - the 'ScoreContext' and 'ScoreOutput' objects at 'theta_hat'.
    """

    def to_dict(self, level=0.95):
        """Return the result as a dictionary of plain python types."""

        return {"method": self.method,
                "theta_hat": self.theta_hat.tolist(),
                "se": self.se.tolist(),
                "cov": self.cov_theta.tolist(),
                "level": level,
                "ci": confidence_intervals(self, level).tolist(),
                "score_norm": self.score_norm,
                "iterations": self.iterations,
                "diagnostics": dict(self.diagnostics)}

    def __init__(self, **kwargs):
        """The class constructor. The keyword arguments are the attributes."""

        self.theta_hat = kwargs["theta_hat"]
        self.gamma_hat = kwargs["gamma_hat"]
        self.cov_theta = kwargs["cov_theta"]
        self.se = numpy.sqrt(numpy.maximum(numpy.diag(self.cov_theta), 0))
        self.score_norm = kwargs["score_norm"]
        self.iterations = kwargs["iterations"]
        self.method = kwargs["method"]
        self.diagnostics = kwargs["diagnostics"]
        self.context = kwargs["context"]
        self.output = kwargs["output"]

def _evaluate(sample, model, theta, score_fn, opts):
    """Evaluate the score at 'theta' and return the '(context, output)' tuple."""

    return Score.score(sample, model, theta, score_fn=score_fn, gamma_tol=opts["gamma_tol"],
                       gamma_max_iter=opts["gamma_max_iter"])

def _sup(vec):
    """Return the sup-norm of 'vec'."""
    return float(numpy.max(numpy.abs(vec))) if vec.size else 0.0

def _diagnostics(ctx, out):
    """Return the diagnostics dictionary for score context 'ctx' and output 'out'."""

    gres = _sup(ctx.gamma_check.values - ctx.gamma.values)
    return {"kappa": float(ctx.system.kappa),
            "fredholm_residual": float(ctx.phi.residual),
            "fredholm_route": ctx.phi.route,
            "v_cond": float(out.v_cond),
            "gamma_residual": gres}

def _v_matrix(ctx, diagnostics):
    """
    Return the 'V' matrix for score context 'ctx'. If it is singular, re-raise 'ErrorSingular' with
    the 'diagnostics' dictionary of the solver state attached.
    """

    try:
        return Score.v_matrix(ctx)
    except ErrorSingular as err:
        raise ErrorSingular(str(err), diagnostics=diagnostics) from None

def _covariance(ctx, out, diagnostics=None):
    """Return the 'V^-1 Sigma0 V^-T / n' covariance matrix."""

    vinv = numpy.linalg.inv(_v_matrix(ctx, diagnostics))
    cov = vinv @ out.sigma0 @ vinv.T / ctx.sample.n
    return (cov + cov.T) / 2

def _check_box(model, theta, what):
    """Raise 'ErrorOutOfBox' if 'theta' is outside the parameter box."""

    worst = float(numpy.max(numpy.abs(theta)))
    if not worst <= model.theta_bound:
        raise ErrorOutOfBox(f"the {what} {theta.tolist()} left the parameter box "
                            f"[-{model.theta_bound}, {model.theta_bound}]")

def z_estimate(sample, model, score_fn=None, theta_init=None, opts=None):
    """
    Solve the score equation 'U_n(f, theta) = 0' and return a 'FitResult' object. The arguments are
    as follows.
      * sample, model - the censored sample and the core model.
      * score_fn - the score function object, 'None' for the efficient score.
      * theta_init - the starting point, zeros by default.
      * opts - the solver options dictionary, see 'DEFAULT_OPTS'.

    Every iteration refits the transformation and the Fredholm solution at the new 'theta' and takes
    the step 'V^-1 U', clipped to the trust radius and halved until the score sup-norm decreases.
    The iterations stop when the score sup-norm is within 'tol'.
    """

    opts = solver_opts(opts)
    if theta_init is None:
        theta_init = numpy.zeros(model.dim_theta)
    theta = model.check_theta(theta_init)

    ctx, out = _evaluate(sample, model, theta, score_fn, opts)
    norm = _sup(out.u)
    iteration = 0

    def state():
        """Return the solver state for the failure diagnostics."""
        return {"stage": "z_estimate", "iterations": iteration, "score_norm": norm,
                "theta": theta.tolist()}

    while norm > opts["tol"]:
        if iteration >= opts["max_iter"]:
            raise ErrorNotConverged(f"the Z-estimator did not converge in {opts['max_iter']} "
                                    f"iterations, the score norm is {norm:.3g}",
                                    diagnostics=state())

        step = numpy.linalg.solve(_v_matrix(ctx, state()), out.u)
        length = float(numpy.linalg.norm(step))
        if length > opts["trust_radius"]:
            step *= opts["trust_radius"] / length

        for _ in range(_MAX_HALVINGS):
            cand = theta + step
            _check_box(model, cand, "Newton iterate")
            try:
                cand_ctx, cand_out = _evaluate(sample, model, cand, score_fn, opts)
            except ErrorNotConverged as err:
                _LOG.debug("z_estimate: evaluation at %s failed, halving the step:\n%s",
                           cand, err)
            else:
                cand_norm = _sup(cand_out.u)
                if cand_norm < norm:
                    break
            step /= 2
        else:
            raise ErrorNotConverged(f"the Z-estimator line search failed at iteration "
                                    f"{iteration + 1}, the score norm is {norm:.3g}",
                                    diagnostics=state())

        theta, ctx, out, norm = cand, cand_ctx, cand_out, cand_norm
        iteration += 1
        _LOG.debug("z_estimate: iteration %d, theta %s, score norm %.3g", iteration, theta, norm)

    cov = _covariance(ctx, out, state())
    _LOG.debug("z_estimate: converged in %d iterations", iteration)
    return FitResult(theta_hat=theta, gamma_hat=ctx.gamma, cov_theta=cov, score_norm=norm,
                     iterations=iteration, method="z_estimator",
                     diagnostics=_diagnostics(ctx, out), context=ctx, output=out)

def one_step(sample, model, score_fn=None, theta0_hat=None, opts=None):
    """
    Compute the one-step estimator 'theta0_hat + V_n(theta0_hat)^-1 U_n(theta0_hat)' and return a
    'FitResult' object with the covariance evaluated at the new estimate. The arguments are the
    same as in 'z_estimate()', 'theta0_hat' is the preliminary estimate.
    """

    if theta0_hat is None:
        raise Error("the one-step estimator requires a preliminary estimate")

    opts = solver_opts(opts)
    theta0 = model.check_theta(theta0_hat)

    ctx0, out0 = _evaluate(sample, model, theta0, score_fn, opts)
    state = {"stage": "one_step", "iterations": 0, "score_norm": _sup(out0.u),
             "theta": theta0.tolist()}
    theta = theta0 + numpy.linalg.solve(_v_matrix(ctx0, state), out0.u)
    _check_box(model, theta, "one-step estimate")

    ctx, out = _evaluate(sample, model, theta, score_fn, opts)
    state.update({"iterations": 1, "score_norm": _sup(out.u), "theta": theta.tolist()})
    cov = _covariance(ctx, out, state)
    diagnostics = _diagnostics(ctx, out)
    diagnostics["preliminary_score_norm"] = _sup(out0.u)
    return FitResult(theta_hat=theta, gamma_hat=ctx.gamma, cov_theta=cov, score_norm=_sup(out.u),
                     iterations=1, method="one_step", diagnostics=diagnostics, context=ctx,
                     output=out)

def confidence_intervals(fit, level=0.95):
    """
    Return the normal confidence intervals 'theta_hat -+ q se' for confidence level 'level', an
    array of shape '(d, 2)'.
    """

    if not 0 < level < 1:
        raise Error(f"bad confidence level {level}, should be in (0, 1)")

    quant = scipy.stats.norm.ppf((1 + level) / 2)
    half = quant * fit.se
    return numpy.stack((fit.theta_hat - half, fit.theta_hat + half), axis=-1)

def robust_covariance(sample, model, fit, score_fn=None):
    """Return the robust (sandwich) covariance estimate at the 'fit' estimate."""

    ctx, out = Score.score(sample, model, fit.theta_hat, score_fn=score_fn, gamma=fit.gamma_hat,
                           per_subject=True)
    return Score.sandwich_covariance(ctx, out)
