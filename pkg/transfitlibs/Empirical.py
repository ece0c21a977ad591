# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the sample functionals of the transformation model: the risk-set averages
's[f](t_k) = (1/n) sum_i Y_i(t_k) f_i alpha_i', the conditional moments 'e[f]', 'cov[f, g]', the 'C'
and 'B' measures, 'log P(0, t)', the self-consistent transformation estimator 'Gamma_n' and the
Volterra solution 'D[f]'.

All the risk-set sums go through '_risk_sums()'. For hazards that do not depend on 'x' (proportional
hazards) it uses reverse cumulative sums, which costs 'O(n)'. Otherwise it evaluates the model on
blocks of '(grid point, record)' pairs, which costs 'O(n * m)' with bounded memory.
"""

import logging
import numpy
from transfitlibs.StepFunction import StepFunction
from transfitlibs.helperlibs.Exceptions import Error, ErrorNotConverged

_LOG = logging.getLogger()

# Maximum count of '(grid point, record)' pairs evaluated at once.
_CHUNK_PAIRS = 1 << 20
# Maximum Newton iterations per grid point when fitting the transformation.
_POINT_MAX_ITER = 100

class Functionals:
    """
    The sample functionals at the grid points 't_k' for a fixed '(Gamma, theta, f)'. Arrays have
    the grid axis first, 'p' is the dimension of 'f' and 'd' is the dimension of 'theta'.
      * grid - the event times.
      * dN - 'dN(t_k)', the failure counts divided by 'n'.
      * gamma - 'Gamma(t_k)'.
      * s1, s_lp, s_lp2 - 's[1]', 's[ell_prime]', 's[ell_prime^2]'.
      * s_f, s_f_lp, s_ff - 's[f]' (m, p), 's[f ell_prime]' (m, p), 's[f f^T]' (m, p, p).
      * s_ld, s_ld_lp, s_f_ld - 's[ell_dot]' (m, d), 's[ell_dot ell_prime]' (m, d),
                                's[f ell_dot^T]' (m, p, d).
      * e_f, e_lp, e_ld - the conditional means 'e[f]', 'e[ell_prime]', 'e[ell_dot]'.
      * var_f, cov_f_lp, var_lp - 'var[f]', 'cov[f, ell_prime]', 'var[ell_prime]'.
      * cov_f_ldot, cov_lp_ldot - 'cov[f, ell_dot]' (m, p, d), 'cov[ell_prime, ell_dot]' (m, d).
      * dC, dB - the jumps of the 'C' and 'B' measures.
      * logP0 - 'log P(0, t_k)', where 'P(u, t) = exp(-int_(u,t] s[ell_prime] dC)'.
    """

    @property
    def C(self): # pylint: disable=invalid-name
        """The cumulative 'C' measure."""
        return StepFunction(self.grid, numpy.cumsum(self.dC), monotone=True)

    @property
    def B(self): # pylint: disable=invalid-name
        """The cumulative 'B' measure."""
        return StepFunction(self.grid, numpy.cumsum(self.dB), monotone=True)

    def p_kernel(self, u_idx, t_idx):
        """Return 'P(t_u, t_t)' for grid indices 'u_idx' and 't_idx'."""
        return numpy.exp(self.logP0[t_idx] - self.logP0[u_idx])

    def _derive(self):
        """Compute the conditional moments and the measures from the risk-set sums."""

        s1 = self.s1
        s1v = s1[:, None]
        self.e_f = self.s_f / s1v
        self.e_lp = self.s_lp / s1
        self.e_ld = self.s_ld / s1v

        self.var_f = self.s_ff / s1v[..., None] - self.e_f[:, :, None] * self.e_f[:, None, :]
        self.var_f = (self.var_f + numpy.swapaxes(self.var_f, 1, 2)) / 2
        self.cov_f_lp = self.s_f_lp / s1v - self.e_f * self.e_lp[:, None]
        self.var_lp = numpy.maximum(self.s_lp2 / s1 - self.e_lp**2, 0.0)
        self.cov_f_ldot = self.s_f_ld / s1v[..., None] - \
                          self.e_f[:, :, None] * self.e_ld[:, None, :]
        self.cov_lp_ldot = self.s_ld_lp / s1v - self.e_lp[:, None] * self.e_ld

        self.dC = self.dN / s1**2
        self.dB = self.var_lp * self.dN
        self.logP0 = -numpy.cumsum(self.s_lp * self.dC)

    def __init__(self, grid, dN, gamma, sums):
        """
        The class constructor. The arguments are as follows.
          * grid - the event times.
          * dN - the failure counts divided by 'n'.
          * gamma - the transformation values at the grid points.
          * sums - dictionary of the risk-set sums, the keys are the 's_*' attribute names.
        """

        self.grid = grid
        self.dN = dN
        self.gamma = gamma

        self.s1 = sums["s1"]
        self.s_lp = sums["s_lp"]
        self.s_lp2 = sums["s_lp2"]
        self.s_f = sums["s_f"]
        self.s_f_lp = sums["s_f_lp"]
        self.s_ff = sums["s_ff"]
        self.s_ld = sums["s_ld"]
        self.s_ld_lp = sums["s_ld_lp"]
        self.s_f_ld = sums["s_f_ld"]

        self.e_f = self.e_lp = self.e_ld = None
        self.var_f = self.cov_f_lp = self.var_lp = None
        self.cov_f_ldot = self.cov_lp_ldot = None
        self.dC = self.dB = self.logP0 = None

        if numpy.any(self.s1 <= 0):
            raise Error("the 's[1]' risk-set average is not positive on the grid")

        self._derive()

def _check_args(sample, model, gamma, theta):
    """Validate the common arguments and return '(gamma_values, theta)'."""

    if sample.dim_z != model.dim_z:
        raise Error(f"the sample covariate dimension {sample.dim_z} does not match the model "
                    f"covariate dimension {model.dim_z}")
    theta = model.check_theta(theta)
    model.check_z(sample.z)

    if isinstance(gamma, StepFunction):
        if gamma.grid is not sample.event_times and \
           not numpy.array_equal(gamma.grid, sample.event_times):
            raise Error("the transformation does not live on the sample event grid")
        vals = gamma.values
    else:
        vals = numpy.asarray(gamma, dtype=float)
        if vals.shape != sample.event_times.shape:
            raise Error(f"got {vals.shape} transformation values for "
                        f"{sample.event_times.shape[0]} grid points")

    if numpy.any(vals < 0) or numpy.any(numpy.diff(vals) < 0):
        raise Error("the transformation must be non-negative and non-decreasing")
    return vals, theta

def _risk_sums(sample, model, gamma_vals, theta, integrands, x_free=False):
    """
    Compute the risk-set sums '(1/n) sum_i Y_i(t_k) alpha_i(t_k) v_i(t_k)' for every integrand 'v'.
    The arguments are as follows.
      * sample, model, theta - the censored sample, the core model and the parameter vector.
      * gamma_vals - the transformation values at the grid points.
      * integrands - a function of '(derivs, z, x)' returning a dictionary of per-record integrand
                     arrays. The leading axes of the arrays are the record axes of 'derivs'.
      * x_free - 'True' if neither the hazard nor the integrands depend on 'x'.

    Return a dictionary of the sums, the leading axis is the grid axis. The "s1" key is always
    included.
    """

    n = sample.n
    m = sample.event_times.shape[0]
    start = sample.risk_start

    if x_free:
        derivs = model.log_hazard_derivs(numpy.zeros(n), theta, sample.z, check=False)
        alpha = numpy.exp(derivs.ell) / n
        vals = integrands(derivs, sample.z, numpy.zeros(n))
        vals["s1"] = numpy.ones(n)
        sums = {}
        for name, val in vals.items():
            val = numpy.broadcast_to(val, (n,) + val.shape[1:]) if val.ndim else \
                  numpy.broadcast_to(val, (n,))
            weighted = alpha.reshape((n,) + (1,) * (val.ndim - 1)) * val
            sums[name] = numpy.cumsum(weighted[::-1], axis=0)[::-1][start]
        return sums

    sums = None
    k0 = 0
    while k0 < m:
        lo = start[k0]
        nsub = n - lo
        k1 = min(m, k0 + max(1, _CHUNK_PAIRS // max(nsub, 1)))

        xg = gamma_vals[k0:k1][:, None]
        zsub = sample.z[lo:][None, :, :]
        derivs = model.log_hazard_derivs(xg, theta, zsub, check=False)
        mask = numpy.arange(lo, n)[None, :] >= start[k0:k1][:, None]
        weight = numpy.where(mask, numpy.exp(derivs.ell), 0.0) / n

        vals = integrands(derivs, zsub, xg)
        if sums is None:
            sums = {"s1": numpy.empty(m)}
            for name, val in vals.items():
                sums[name] = numpy.empty((m,) + val.shape[2:])

        sums["s1"][k0:k1] = numpy.sum(weight, axis=1)
        shape = weight.shape
        for name, val in vals.items():
            val = numpy.broadcast_to(val, shape + val.shape[2:])
            sums[name][k0:k1] = numpy.einsum("bs,bs...->b...", weight, val)

        k0 = k1

    return sums

def _moment_integrands(score_fn):
    """Return the integrands function for 'conditional_moments()'."""

    def integrands(derivs, z, x):
        """Per-record integrands of all the risk-set sums."""

        lp = derivs.ell_prime
        ld = derivs.ell_dot
        if score_fn is None:
            f = ld
        else:
            f = score_fn(x, z, derivs)
        shape = numpy.broadcast_shapes(lp.shape, f.shape[:-1])
        f = numpy.broadcast_to(f, shape + f.shape[-1:])
        ld = numpy.broadcast_to(ld, shape + ld.shape[-1:])
        lp = numpy.broadcast_to(lp, shape)

        return {"s_lp": lp, "s_lp2": lp**2, "s_f": f, "s_f_lp": f * lp[..., None],
                "s_ff": f[..., :, None] * f[..., None, :], "s_ld": ld,
                "s_ld_lp": ld * lp[..., None], "s_f_ld": f[..., :, None] * ld[..., None, :]}

    return integrands

def _is_x_free(model, score_fn):
    """Return 'True' if the risk-set sums do not depend on the transformation values."""
    return model.gamma_free and (score_fn is None or getattr(score_fn, "x_free", False))

def conditional_moments(sample, model, gamma, theta, score_fn=None):
    """
    Compute and return the 'Functionals' object for the sample. The arguments are as follows.
      * sample - the censored sample.
      * model - the core model.
      * gamma - the transformation, a step function on the sample event grid (or its values).
      * theta - the parameter vector.
      * score_fn - the score function object 'f', 'None' means 'f = ell_dot'.
    """

    gamma_vals, theta = _check_args(sample, model, gamma, theta)

    sums = _risk_sums(sample, model, gamma_vals, theta, _moment_integrands(score_fn),
                      x_free=_is_x_free(model, score_fn))
    return Functionals(sample.event_times, sample.event_counts, gamma_vals, sums)

def s_hat(sample, model, gamma, theta, f_tag="1"):
    """
    Return the risk-set average 's[f]' as a step function on the event grid. The 'f_tag' argument
    selects 'f': "1", "ell_dot", "ell_prime", "ell_dprime", or a score function object. The other
    arguments are the same as in 'conditional_moments()'.
    """

    gamma_vals, theta = _check_args(sample, model, gamma, theta)

    if callable(f_tag):
        func = lambda derivs, z, x: {"val": f_tag(x, z, derivs)}
        x_free = _is_x_free(model, f_tag)
    else:
        names = {"1": None, "ell_dot": "ell_dot", "ell_prime": "ell_prime",
                 "ell_dprime": "ell_dprime"}
        if f_tag not in names:
            raise Error(f"bad 'f' tag '{f_tag}', use one of: {', '.join(names)}")
        attr = names[f_tag]
        func = lambda derivs, z, x: {} if attr is None else {"val": getattr(derivs, attr)}
        x_free = model.gamma_free

    sums = _risk_sums(sample, model, gamma_vals, theta, func, x_free=x_free)
    return StepFunction(sample.event_times, sums.get("val", sums["s1"]))

def _gamma_from_s1(sample, s1):
    """Return the cumulative ratio 'int dN / s[1]' values."""
    return numpy.cumsum(sample.event_counts / s1)

def gamma_check(sample, model, gamma, theta):
    """
    Return the step function 'Gamma_hat(t) = int_0^t dN(u) / s[1](u, Gamma, theta)'. The fitted
    transformation is a fixed point of this map.
    """

    s1 = s_hat(sample, model, gamma, theta, "1").values
    return StepFunction(sample.event_times, _gamma_from_s1(sample, s1), monotone=True)

def _s1_slope(model, theta, z, x, n):
    """Return 's[1]' and 's[ell_prime]' of the records 'z' at a single transformed time 'x'."""

    derivs = model.log_hazard_derivs(x, theta, z, check=False)
    alpha = numpy.exp(derivs.ell)
    return numpy.sum(alpha) / n, numpy.sum(alpha * derivs.ell_prime) / n

def _solve_point(model, theta, z, n, prev, dn, k):
    """
    Solve 'x - prev - dn / s[1](x) = 0' for the transformation value at grid point 'k' by
    safeguarded Newton iterations, starting from the left-limit guess 'prev + dn / s[1](prev)'.
    Return the solution.
    """

    s1, _ = _s1_slope(model, theta, z, prev, n)
    lo, hi = prev, numpy.inf
    x = prev + dn / s1
    g = numpy.inf

    for _ in range(_POINT_MAX_ITER):
        s1, slp = _s1_slope(model, theta, z, x, n)
        g = x - prev - dn / s1
        if g == 0:
            return x
        if g < 0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)

        gprime = 1 + dn * slp / s1**2
        xnew = x - g / gprime if gprime > 0 else numpy.nan
        if not lo < xnew < hi:
            # Bisect inside the bracket, or walk right until the sign changes.
            xnew = (lo + hi) / 2 if numpy.isfinite(hi) else prev + 2 * (lo - prev)
        if abs(xnew - x) <= 1e-14 * max(1.0, abs(x)):
            return xnew
        x = xnew

    raise ErrorNotConverged(f"the transformation self-consistency equation has no solution at "
                            f"event time number {k + 1} ({z.shape[0]} records at risk)",
                            diagnostics={"stage": "fit_gamma", "event_index": k,
                                         "at_risk": int(z.shape[0]), "residual": float(abs(g))})

def fit_gamma(sample, model, theta, tol=1e-10, max_iter=200):
    """
    Fit the transformation 'Gamma_n' solving 'dGamma(t_k) = dN(t_k) / s[1](t_k, Gamma, theta)' and
    return it as a monotone step function on the event grid. The arguments are as follows.
      * sample, model, theta - the censored sample, the core model and the parameter vector.
      * tol - the sup-norm tolerance of the fixed-point relation, relative to 'max(1, sup Gamma)'.
      * max_iter - maximum count of the damped fixed-point iterations after the forward sweep.

    The forward sweep solves the relation one grid point at a time, which is exact in one pass for
    proportional hazards. For other models the result is verified against 'gamma_check()' and
    polished by damped fixed-point iterations if needed.
    """

    if not tol > 0:
        raise Error(f"bad tolerance {tol}, should be positive")

    zero = numpy.zeros(sample.event_times.shape[0])
    _, theta = _check_args(sample, model, zero, theta)

    if model.gamma_free:
        s1 = _risk_sums(sample, model, zero, theta, lambda *_: {}, x_free=True)["s1"]
        return StepFunction(sample.event_times, _gamma_from_s1(sample, s1), monotone=True)

    n = sample.n
    gam = numpy.empty_like(zero)
    prev = 0.0
    for k, (lo, dn) in enumerate(zip(sample.risk_start, sample.event_counts)):
        prev = _solve_point(model, theta, sample.z[lo:], n, prev, dn, k)
        gam[k] = prev

    residual = numpy.inf
    last = numpy.inf
    damping = 1.0
    for iteration in range(max_iter + 1):
        s1 = _risk_sums(sample, model, gam, theta, lambda *_: {})["s1"]
        new = _gamma_from_s1(sample, s1)
        residual = float(numpy.max(numpy.abs(new - gam)))
        if residual <= tol * max(1.0, float(gam[-1])):
            _LOG.debug("fit_gamma: residual %.3g after %d fixed-point iterations",
                       residual, iteration)
            return StepFunction(sample.event_times, gam, monotone=True)
        if iteration == max_iter:
            break
        if residual > last and damping == 1.0:
            damping = 0.5
            _LOG.warning("the transformation fixed-point iteration oscillates, damping enabled")
        gam = gam + damping * (new - gam)
        gam = numpy.maximum.accumulate(numpy.maximum(gam, 0))
        last = residual

    raise ErrorNotConverged(f"the transformation fixed-point iteration did not converge in "
                            f"{max_iter} iterations, final residual {residual:.3g}",
                            diagnostics={"stage": "fit_gamma", "iterations": max_iter,
                                         "residual": residual})

def d_volterra(funcs, s_f, method="recursive"):
    """
    Solve the Volterra equation for 'D[f]' and return it as a step function on the grid. The
    arguments are as follows.
      * funcs - the 'Functionals' object.
      * s_f - the 's[f]' values, shape '(m,)' or '(m, p)'.
      * method - "recursive" for the recursion
                 'D(t_k) = exp(-s[ell_prime](t_k) dC(t_k)) D(t_{k-1}) - s[f](t_k) dC(t_k)', or
                 "explicit" for the sum 'D(t) = -sum_{u <= t} s[f](u) dC(u) P(u, t)'.
    """

    s_f = numpy.asarray(s_f, dtype=float)
    if s_f.shape[:1] != funcs.grid.shape:
        raise Error(f"got {s_f.shape[0]} 's[f]' values for {funcs.grid.shape[0]} grid points")

    shape = (-1,) + (1,) * (s_f.ndim - 1)
    incr = s_f * funcs.dC.reshape(shape)

    if method == "explicit":
        # 'P(u, t) = P(0, t) / P(0, u)', the 'log P' values are bounded by the overflow guard.
        logp = funcs.logP0.reshape(shape)
        vals = -numpy.exp(logp) * numpy.cumsum(incr * numpy.exp(-logp), axis=0)
    elif method == "recursive":
        decay = numpy.exp(-funcs.s_lp * funcs.dC)
        vals = numpy.empty_like(incr)
        prev = numpy.zeros(s_f.shape[1:])
        for k in range(incr.shape[0]):
            prev = decay[k] * prev - incr[k]
            vals[k] = prev
    else:
        raise Error(f"bad Volterra solution method '{method}', use one of: recursive, explicit")

    return StepFunction(funcs.grid, vals)
