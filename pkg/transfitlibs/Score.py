# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the efficient score machinery: the score functions 'f', the score vector
'U_n(f, theta)', the 'Sigma1', 'Sigma2', 'Sigma0' and 'V_n' matrices, per-subject score
contributions, and the nuisance orthogonality diagnostic.

A score function object is a callable '(x, z, derivs)' returning the 'f' values with the last axis
being the 'f' dimension. Here 'x' is the transformed time, 'z' the covariates and 'derivs' the
'LogHazardDerivs' object at '(x, theta, z)'. The object has the 'dim' attribute ('None' means
'dim_theta') and the 'x_free' attribute ('True' if 'f' does not depend on 'x'). A 'None' score
function means 'f = ell_dot', the efficient score.
"""

import logging
import numpy
from transfitlibs import Empirical
from transfitlibs.Fredholm import RESIDUAL_TOL, build_system, solve_phi
from transfitlibs.StepFunction import StepFunction
from transfitlibs.helperlibs.Exceptions import Error, ErrorBadConfig, ErrorSingular

_LOG = logging.getLogger()

# Matrices with a larger condition number are considered singular.
COND_MAX = 1e12
# Maximum count of '(grid point, record)' pairs evaluated at once.
_CHUNK_PAIRS = 1 << 20

class EfficientScore:
    """The efficient score choice 'f = ell_dot'."""

    dim = None
    x_free = True

    def __call__(self, x, z, derivs):
        """Evaluate 'f'."""
        return derivs.ell_dot

    @staticmethod
    def to_spec():
        """Return the score specification dictionary."""
        return {"type": "efficient"}

class StepWeightScore:
    """
    The step-weight score 'f(x, z) = w(x) z', where 'w' is a bounded step function of the
    transformed time: 'w(x) = levels[j]' for 'breaks[j-1] <= x < breaks[j]'.
    """

    def __call__(self, x, z, derivs):
        """Evaluate 'f'."""

        weight = self.levels[numpy.searchsorted(self.breaks, x, side="right")]
        return weight[..., None] * z

    def to_spec(self):
        """Return the score specification dictionary."""
        return {"type": "step_weight", "breaks": self.breaks.tolist(),
                "levels": self.levels.tolist()}

    def __init__(self, breaks, levels, dim):
        """
        The class constructor. The arguments are as follows.
          * breaks - strictly increasing break points of 'w'.
          * levels - the levels of 'w', one more than break points.
          * dim - the covariate dimension.
        """

        self.breaks = numpy.asarray(breaks, dtype=float).reshape(-1)
        self.levels = numpy.asarray(levels, dtype=float).reshape(-1)
        self.dim = dim
        self.x_free = self.breaks.shape[0] == 0

        if self.levels.shape[0] != self.breaks.shape[0] + 1:
            raise ErrorBadConfig(f"the step-weight score has {self.breaks.shape[0]} break points, "
                                 f"so it needs {self.breaks.shape[0] + 1} levels, got "
                                 f"{self.levels.shape[0]}")
        if not numpy.all(numpy.isfinite(self.breaks)) or \
           not numpy.all(numpy.isfinite(self.levels)):
            raise ErrorBadConfig("the step-weight score breaks and levels must be finite numbers")
        if numpy.any(numpy.diff(self.breaks) <= 0):
            raise ErrorBadConfig("the step-weight score break points must be strictly increasing")

class DegenerateScore:
    """
    A score function of the form 'f(x, z) = H(x) ell_prime(x, theta, z) + h(x)'. When 'h' is built
    by 'for_sample()', the weight 'f - e[f] - (ell_prime - e[ell_prime]) phi' vanishes on the grid,
    and so does the score.
    """

    x_free = False

    def _lookup(self, vals, x):
        """Evaluate the step function with values 'vals' on the transformed time grid at 'x'."""

        idx = numpy.searchsorted(self.grid, x, side="right") - 1
        res = vals[numpy.maximum(idx, 0)]
        return numpy.where((idx < 0)[..., None], 0.0, res)

    def __call__(self, x, z, derivs):
        """Evaluate 'f'."""

        x = numpy.asarray(x, dtype=float)
        lp = derivs.ell_prime
        return self._lookup(self.big_h, x) * lp[..., None] + self._lookup(self.small_h, x)

    @classmethod
    def for_sample(cls, sample, model, theta, gamma, big_h):
        """
        Create the degenerate score function for a sample. The arguments are as follows.
          * sample, model, theta - the censored sample, the core model and the parameter vector.
          * gamma - the fitted transformation.
          * big_h - the 'H' values at the event grid points, shape '(m,)' or '(m, p)'.

        The 'h' part is chosen so that 'D[f] = -H', which makes 'phi = H' solve the Fredholm
        equation with 'rho' identically 0.
        """

        big_h = numpy.asarray(big_h, dtype=float)
        if big_h.ndim == 1:
            big_h = big_h[:, None]

        funcs = Empirical.conditional_moments(sample, model, gamma, theta)
        decay = funcs.s_lp * funcs.dC
        prev = numpy.concatenate((numpy.zeros_like(big_h[:1]), big_h[:-1]))
        small_h = (big_h * (1 - decay)[:, None] - numpy.exp(-decay)[:, None] * prev) / \
                  (funcs.s1 * funcs.dC)[:, None]
        return cls(gamma.values, big_h, small_h)

    def __init__(self, grid, big_h, small_h):
        """
        The class constructor. The arguments are as follows.
          * grid - the transformed time grid, strictly increasing.
          * big_h - the 'H' values at the grid points, shape '(m, p)'.
          * small_h - the 'h' values at the grid points, shape '(m, p)'.
        """

        self.grid = numpy.asarray(grid, dtype=float)
        self.big_h = numpy.asarray(big_h, dtype=float)
        self.small_h = numpy.asarray(small_h, dtype=float)
        self.dim = self.big_h.shape[1]

        if numpy.any(numpy.diff(self.grid) <= 0):
            raise Error("the degenerate score grid is not strictly increasing")

def score_fn_from_spec(spec, model):
    """
    Create and return the score function object for score specification dictionary 'spec'. Return
    'None' for the efficient score.
    """

    if spec is None:
        return None
    if not isinstance(spec, dict):
        raise ErrorBadConfig(f"bad 'score' specification '{spec}', expected a dictionary")

    kind = spec.get("type", "efficient")
    if kind == "efficient":
        unknown = set(spec) - {"type"}
        if unknown:
            raise ErrorBadConfig(f"unknown key(s) in the efficient score specification: "
                                 f"{', '.join(sorted(unknown))}")
        return None

    if kind == "step_weight":
        unknown = set(spec) - {"type", "breaks", "levels"}
        if unknown:
            raise ErrorBadConfig(f"unknown key(s) in the step-weight score specification: "
                                 f"{', '.join(sorted(unknown))}")
        if model.dim_theta != model.dim_z:
            raise ErrorBadConfig(f"the step-weight score requires the parameter dimension to match "
                                 f"the covariate dimension, got {model.dim_theta} and "
                                 f"{model.dim_z}")
        try:
            return StepWeightScore(spec.get("breaks", []), spec.get("levels", [1.0]), model.dim_z)
        except (TypeError, ValueError) as err:
            raise ErrorBadConfig(f"bad step-weight score specification:\n{err}") from None

    raise ErrorBadConfig(f"bad score type '{kind}', use one of: efficient, step_weight")

def _eval_f(score_fn, x, z, derivs):
    """Evaluate score function 'score_fn' and broadcast the result to the record shape."""

    f = derivs.ell_dot if score_fn is None else score_fn(x, z, derivs)
    shape = numpy.broadcast_shapes(derivs.ell_prime.shape, f.shape[:-1])
    return numpy.broadcast_to(f, shape + f.shape[-1:])

class ScoreContext:
    """
    Everything computed at a single '(sample, model, theta, f)'. The public attributes are as
    follows.
      * sample, model, theta, score_fn - the inputs.
      * gamma - the transformation 'Gamma_n' the score is evaluated at.
      * gamma_check - the 'Gamma_hat' step function, 'int dN / s[1](Gamma, theta)'.
      * functionals - the 'Functionals' object.
      * system - the 'FredholmSystem' object.
      * phi - the 'PhiSolution' object.
      * d_ldot - 'D[ell_dot]' at the grid points, shape '(m, d)'.
      * rho_hat - 'rho[f, phi] = cov[f, ell_prime] - var[ell_prime] phi', shape '(m, p)'.
      * tail - the tail integrals 'int_[t_k, tau0] P(t_k, u) rho_hat(u) dN(u)', shape '(m, p)'.
    """

    def __init__(self, **kwargs):
        """The class constructor. The keyword arguments are the attributes."""

        self.sample = kwargs["sample"]
        self.model = kwargs["model"]
        self.theta = kwargs["theta"]
        self.score_fn = kwargs["score_fn"]
        self.gamma = kwargs["gamma"]
        self.gamma_check = kwargs["gamma_check"]
        self.functionals = kwargs["functionals"]
        self.system = kwargs["system"]
        self.phi = kwargs["phi"]
        self.d_ldot = kwargs["d_ldot"]
        self.rho_hat = kwargs["rho_hat"]
        self.tail = kwargs["tail"]

class ScoreOutput:
    """
    The score and the matrices. The public attributes are as follows.
      * u - the score vector 'U_n(f, theta)'.
      * sigma1, sigma2, sigma0 - the 'Sigma' matrices, 'sigma0 = sigma1 + sigma2'.
      * v - the 'V_n' matrix (not checked for singularity, use 'v_matrix()' for that).
      * v_cond - the condition number of 'v' ('inf' if it is not square).
      * per_subject - per-record score contributions in the sorted record order (rows average to
                      'u'), or 'None' if not requested.
    """

    def __init__(self, u, sigma1, sigma2, v, per_subject=None):
        """The class constructor. The arguments are the attributes described in the docstring."""

        self.u = u
        self.sigma1 = sigma1
        self.sigma2 = sigma2
        self.sigma0 = sigma1 + sigma2
        self.v = v
        self.v_cond = condition_number(v)
        self.per_subject = per_subject

def condition_number(mat):
    """Return the 2-norm condition number of 'mat', 'inf' for non-square or singular matrices."""

    mat = numpy.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or not numpy.all(numpy.isfinite(mat)):
        return numpy.inf
    if not numpy.any(mat):
        return numpy.inf
    with numpy.errstate(divide="ignore", invalid="ignore"):
        cond = float(numpy.linalg.cond(mat))
    return cond if numpy.isfinite(cond) else numpy.inf

def tail_integrals(funcs, rho_hat):
    """
    Return 'int_[t_k, tau0] P(t_k, u) rho_hat(u) dN(u)' for every grid point 't_k', computed by a
    single backward pass.
    """

    p0 = numpy.exp(funcs.logP0)[:, None]
    acc = numpy.cumsum((p0 * rho_hat * funcs.dN[:, None])[::-1], axis=0)[::-1]
    return acc / p0

def _score_vector(ctx):
    """
    Return the score vector: the average of 'b1 - b2 phi' over the failures, minus the tail
    integrals integrated against 'Gamma_hat - Gamma'.
    """

    sample = ctx.sample
    funcs = ctx.functionals
    phi = ctx.phi.phi

    failed = sample.delta == 1
    kidx = sample.event_index[failed]
    xg = funcs.gamma[kidx]
    zf = sample.z[failed]
    derivs = ctx.model.log_hazard_derivs(xg, ctx.theta, zf, check=False)
    f = _eval_f(ctx.score_fn, xg, zf, derivs)

    b1 = f - funcs.e_f[kidx]
    b2 = derivs.ell_prime - funcs.e_lp[kidx]
    first = numpy.sum(b1 - b2[:, None] * phi[kidx], axis=0) / sample.n

    dgamma = ctx.gamma_check.jumps() - ctx.gamma.jumps()
    return first - ctx.tail.T @ dgamma

def _per_subject(ctx):
    """
    Return the per-record score contributions
    'delta_i W(X_i) - sum_{t_k <= X_i} W_i(t_k) alpha_i(t_k) dGamma(t_k)', where
    'W = f - e[f] - (ell_prime - e[ell_prime]) phi - tail / s[1]'.
    """

    sample = ctx.sample
    funcs = ctx.functionals
    phi = ctx.phi.phi
    shift = ctx.tail / funcs.s1[:, None]
    dgamma = ctx.gamma.jumps()
    n = sample.n
    m = funcs.grid.shape[0]
    start = sample.risk_start

    def weight_fn(xg, zsub, kslice):
        """Return 'W' and 'alpha' for a block of grid points and records."""

        derivs = ctx.model.log_hazard_derivs(xg, ctx.theta, zsub, check=False)
        f = _eval_f(ctx.score_fn, xg, zsub, derivs)
        lp = derivs.ell_prime
        wvals = f - funcs.e_f[kslice][:, None, :] - \
                (lp - funcs.e_lp[kslice][:, None])[..., None] * phi[kslice][:, None, :] - \
                shift[kslice][:, None, :]
        return wvals, numpy.exp(derivs.ell)

    p = phi.shape[1]
    res = numpy.zeros((n, p))

    failed = numpy.nonzero(sample.delta == 1)[0]
    kidx = sample.event_index[failed]
    wvals, _ = weight_fn(funcs.gamma[kidx][:, None], sample.z[failed][:, None, :], kidx)
    res[failed] = wvals[:, 0, :]

    k0 = 0
    while k0 < m:
        lo = start[k0]
        nsub = n - lo
        k1 = min(m, k0 + max(1, _CHUNK_PAIRS // max(nsub, 1)))
        kslice = slice(k0, k1)

        wvals, alpha = weight_fn(funcs.gamma[kslice][:, None], sample.z[lo:][None, :, :], kslice)
        mask = numpy.arange(lo, n)[None, :] >= start[kslice][:, None]
        weight = numpy.where(mask, alpha, 0.0) * dgamma[kslice][:, None]
        res[lo:] -= numpy.einsum("bs,bsp->sp", weight, numpy.broadcast_to(wvals, weight.shape +
                                                                          (p,)))
        k0 = k1

    return res

def _check_psd(mat, name):
    """Verify that symmetric matrix 'mat' is positive semidefinite up to rounding."""

    if mat.size == 0:
        return
    eigvals = numpy.linalg.eigvalsh(mat)
    tol = 1e-10 * max(1.0, float(numpy.max(numpy.abs(eigvals))))
    if eigvals[0] < -tol:
        raise Error(f"internal error: the '{name}' matrix is not positive semidefinite, the "
                    f"smallest eigenvalue is {eigvals[0]:.3g}")

def sigma_matrices(ctx):
    """
    Compute and return the '(sigma1, sigma2, sigma0)' matrices for score context 'ctx':
      * sigma1 - 'int var[f - ell_prime phi] dN'.
      * sigma2 - 'int tail tail^T dC'.
      * sigma0 - 'sigma1 + sigma2'.
    """

    funcs = ctx.functionals
    phi = ctx.phi.phi

    cross = funcs.cov_f_lp[:, :, None] * phi[:, None, :]
    inner = funcs.var_f - cross - numpy.swapaxes(cross, 1, 2) + \
            funcs.var_lp[:, None, None] * phi[:, :, None] * phi[:, None, :]
    sigma1 = numpy.einsum("k,kij->ij", funcs.dN, inner)
    sigma2 = numpy.einsum("k,ki,kj->ij", funcs.dC, ctx.tail, ctx.tail)

    sigma1 = (sigma1 + sigma1.T) / 2
    sigma2 = (sigma2 + sigma2.T) / 2
    _check_psd(sigma1, "sigma1")
    _check_psd(sigma2, "sigma2")
    return sigma1, sigma2, sigma1 + sigma2

def _v_raw(ctx):
    """Return the 'V_n' matrix without the singularity check."""

    funcs = ctx.functionals
    phi = ctx.phi.phi
    d_ld = ctx.d_ldot

    inner = funcs.cov_f_ldot + funcs.cov_f_lp[:, :, None] * d_ld[:, None, :] - \
            phi[:, :, None] * funcs.cov_lp_ldot[:, None, :] - \
            funcs.var_lp[:, None, None] * phi[:, :, None] * d_ld[:, None, :]
    return numpy.einsum("k,kij->ij", funcs.dN, inner)

def v_matrix(ctx):
    """
    Return the 'V_n = int cov[f - ell_prime phi, ell_dot + ell_prime D[ell_dot]] dN' matrix for
    score context 'ctx'. Raise 'ErrorSingular' if it is singular or ill-conditioned.
    """

    vmat = _v_raw(ctx)
    if vmat.shape[0] != vmat.shape[1]:
        raise ErrorBadConfig(f"the score function dimension {vmat.shape[0]} does not match the "
                             f"parameter dimension {vmat.shape[1]}")

    cond = condition_number(vmat)
    if cond > COND_MAX:
        raise ErrorSingular(f"the 'V' matrix is singular or ill-conditioned, condition number "
                            f"{cond:.3g} exceeds {COND_MAX:.0g}")
    return vmat

def score(sample, model, theta, score_fn=None, gamma=None, per_subject=False, gamma_tol=1e-10,
          gamma_max_iter=200, phi_tol=RESIDUAL_TOL):
    """
    Evaluate the score at 'theta' and return the '(ScoreContext, ScoreOutput)' tuple. The
    arguments are as follows.
      * sample, model, theta - the censored sample, the core model and the parameter vector.
      * score_fn - the score function object, 'None' for the efficient score 'f = ell_dot'.
      * gamma - the transformation step function on the event grid, fitted by
                'Empirical.fit_gamma()' if 'None'.
      * per_subject - compute the per-record score contributions if 'True'.
      * gamma_tol, gamma_max_iter - the transformation fit options.
      * phi_tol - the Fredholm residual tolerance.
    """

    theta = model.check_theta(theta)
    if score_fn is not None and score_fn.dim is not None and score_fn.dim < 1:
        raise ErrorBadConfig("the score function must have at least one component")

    if gamma is None:
        gamma = Empirical.fit_gamma(sample, model, theta, tol=gamma_tol, max_iter=gamma_max_iter)
    elif not isinstance(gamma, StepFunction):
        gamma = StepFunction(sample.event_times, gamma, monotone=True)

    funcs = Empirical.conditional_moments(sample, model, gamma, theta, score_fn)
    gamma_check = StepFunction(funcs.grid, numpy.cumsum(funcs.dN / funcs.s1), monotone=True)

    system = build_system(funcs)
    d_f = Empirical.d_volterra(funcs, funcs.s_f)
    phi = solve_phi(system, funcs, d_f, tol=phi_tol)
    d_ldot = Empirical.d_volterra(funcs, funcs.s_ld).values

    rho_hat = funcs.cov_f_lp - funcs.var_lp[:, None] * phi.phi
    tail = tail_integrals(funcs, rho_hat)

    ctx = ScoreContext(sample=sample, model=model, theta=theta, score_fn=score_fn, gamma=gamma,
                       gamma_check=gamma_check, functionals=funcs, system=system, phi=phi,
                       d_ldot=d_ldot, rho_hat=rho_hat, tail=tail)

    u = _score_vector(ctx)
    sigma1, sigma2, _ = sigma_matrices(ctx)
    per = _per_subject(ctx) if per_subject else None
    out = ScoreOutput(u, sigma1, sigma2, _v_raw(ctx), per_subject=per)

    _LOG.debug("score at theta %s: |U| %.3g, kappa %.4g, Fredholm residual %.3g",
               theta, float(numpy.max(numpy.abs(u))), system.kappa, phi.residual)
    return ctx, out

def sandwich_covariance(ctx, out):
    """
    Return the robust covariance estimate 'V^-1 S V^-T / n' of the parameter estimate, where 'S'
    is the empirical covariance of the per-record score contributions.
    """

    if out.per_subject is None:
        raise Error("the robust covariance requires the per-subject score contributions")

    vinv = numpy.linalg.inv(v_matrix(ctx))
    contrib = out.per_subject - numpy.mean(out.per_subject, axis=0)
    smat = contrib.T @ contrib / contrib.shape[0]
    return vinv @ smat @ vinv.T / ctx.sample.n

def information_bound(sigma0):
    """
    Return the information bound 'sigma0^-1' for the efficient score, or 'None' if 'sigma0' is
    singular (the bound is infinite).
    """

    if condition_number(sigma0) > COND_MAX:
        return None
    return numpy.linalg.inv(sigma0)

class NuisanceDirection:
    """
    A nuisance direction 'g': a step function of the calendar time, 'g(u) = levels[j]' for
    'breaks[j-1] < u <= breaks[j]'.
    """

    def __call__(self, u):
        """Evaluate 'g'."""
        return self.levels[numpy.searchsorted(self.breaks, u, side="left")]

    def integrated(self, x, gamma0):
        """Return 'G(x) = int_0^x g dGamma0' for the known continuous transformation 'gamma0'."""

        x = numpy.asarray(x, dtype=float)
        edges = numpy.concatenate(([0.0], self.breaks))
        res = numpy.zeros_like(x)
        for idx, level in enumerate(self.levels):
            lo = edges[idx]
            hi = self.breaks[idx] if idx < self.breaks.shape[0] else numpy.inf
            res += level * (gamma0(numpy.clip(x, lo, hi)) - gamma0(lo))
        return res

    def __init__(self, breaks, levels, name=None):
        """
        The class constructor. The arguments are as follows.
          * breaks - strictly increasing positive break points.
          * levels - the levels, one more than break points.
          * name - the direction name used in reports.
        """

        self.breaks = numpy.asarray(breaks, dtype=float).reshape(-1)
        self.levels = numpy.asarray(levels, dtype=float).reshape(-1)
        self.name = name

        if self.levels.shape[0] != self.breaks.shape[0] + 1:
            raise ErrorBadConfig(f"nuisance direction has {self.breaks.shape[0]} break points, so "
                                 f"it needs {self.breaks.shape[0] + 1} levels")
        if numpy.any(numpy.diff(self.breaks) <= 0) or numpy.any(self.breaks < 0):
            raise ErrorBadConfig("nuisance direction break points must be non-negative and "
                                 "strictly increasing")
        if self.name is None:
            self.name = "g" + "/".join(f"{lvl:g}" for lvl in self.levels)

DEFAULT_DIRECTIONS = ({"type": "constant"}, {"type": "indicator", "upto": "median"})

def directions_from_spec(specs, sample):
    """
    Create and return the list of 'NuisanceDirection' objects for the 'specs' list of
    specification dictionaries. Supported types are "constant" ('g = 1'), "indicator"
    ('g = 1(u <= upto)', where 'upto' may be "median" for the median withdrawal time of 'sample')
    and "step" (the 'breaks' and 'levels' keys).
    """

    if specs is None:
        specs = DEFAULT_DIRECTIONS

    directions = []
    for spec in specs:
        if not isinstance(spec, dict):
            raise ErrorBadConfig(f"bad nuisance direction specification '{spec}'")
        kind = spec.get("type")
        name = spec.get("name")
        if kind == "constant":
            directions.append(NuisanceDirection([], [1.0], name=name or "constant"))
        elif kind == "indicator":
            upto = spec.get("upto", "median")
            if upto == "median":
                value = float(numpy.median(sample.x))
                name = name or "indicator_median"
            else:
                try:
                    value = float(upto)
                except (TypeError, ValueError):
                    raise ErrorBadConfig(f"bad indicator direction end-point '{upto}'") from None
                name = name or f"indicator_{value:g}"
            directions.append(NuisanceDirection([value], [1.0, 0.0], name=name))
        elif kind == "step":
            directions.append(NuisanceDirection(spec.get("breaks", []), spec.get("levels", [1.0]),
                                                name=name))
        else:
            raise ErrorBadConfig(f"bad nuisance direction type '{kind}', use one of: constant, "
                                 f"indicator, step")
    return directions

def nuisance_score(sample, model, theta0, gamma0, direction):
    """
    Return the nuisance score 'delta [g(X) + ell_prime(Gamma0(X)) G(X)] - G(X) alpha(Gamma0(X))'
    of every record in the sorted record order, where 'G(x) = int_0^x g dGamma0'.
    """

    gx = gamma0(sample.x)
    derivs = model.log_hazard_derivs(gx, theta0, sample.z)
    big_g = direction.integrated(sample.x, gamma0)
    return sample.delta * (direction(sample.x) + derivs.ell_prime * big_g) - \
           big_g * numpy.exp(derivs.ell)

def orthogonality_products(sample, model, theta0, gamma0, directions, score_fn=None, **opts):
    """
    Return the per-record products of the score contributions and the nuisance scores, shape
    '(n, p, number of directions)'. The 'opts' keyword arguments are passed to 'score()'.
    """

    _, out = score(sample, model, theta0, score_fn=score_fn, per_subject=True, **opts)
    nscores = numpy.stack([nuisance_score(sample, model, theta0, gamma0, direction)
                           for direction in directions], axis=-1)
    return out.per_subject[:, :, None] * nscores[:, None, :]

def orthogonality_report(products, names):
    """
    Build and return the orthogonality report dictionary from the per-record products. For every
    direction the report includes the covariance estimate, its standard error, the ratio of the two
    and whether the covariance is within 3 standard errors of 0.
    """

    return orthogonality_report_from_moments(numpy.sum(products, axis=0),
                                             numpy.sum(products**2, axis=0), products.shape[0],
                                             names)

def orthogonality_report_from_moments(total, total_sq, count, names):
    """
    Same as 'orthogonality_report()', but take the sums of the products and of their squares over
    'count' records. Used for pooling Monte-Carlo replicates.
    """

    if count < 2:
        raise Error("the orthogonality report requires at least 2 records")

    mean = total / count
    var = numpy.maximum(total_sq - count * mean**2, 0) / (count - 1)
    stderr = numpy.sqrt(var / count)

    report = {"records": int(count), "directions": {}}
    for idx, name in enumerate(names):
        cov = mean[:, idx]
        se = stderr[:, idx]
        with numpy.errstate(divide="ignore", invalid="ignore"):
            ratio = numpy.where(se > 0, cov / se, 0.0)
        report["directions"][name] = {"cov": cov.tolist(), "se": se.tolist(),
                                      "ratio": ratio.tolist(),
                                      "within_3se": bool(numpy.all(numpy.abs(cov) <= 3 * se))}
    return report

def nuisance_orthogonality_check(sample, model, theta0, gamma0, g_specs=None, score_fn=None,
                                 **opts):
    """
    Check the orthogonality of the score to the nuisance scores on a single sample and return the
    report dictionary (see 'orthogonality_report()'). The arguments are as follows.
      * sample - the censored sample simulated at '(theta0, gamma0)'.
      * model - the core model.
      * theta0 - the true parameter.
      * gamma0 - the true transformation, a 'GammaMap' object.
      * g_specs - list of nuisance direction specifications, see 'directions_from_spec()'.
      * score_fn - the score function object, 'None' for the efficient score.
      * opts - keyword arguments for 'score()'.
    """

    directions = directions_from_spec(g_specs, sample)
    products = orthogonality_products(sample, model, theta0, gamma0, directions,
                                      score_fn=score_fn, **opts)
    return orthogonality_report(products, [direction.name for direction in directions])
