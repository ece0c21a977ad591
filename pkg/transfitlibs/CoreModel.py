# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the "core model" hazard families of the transformation model. A core model is
a parametric conditional hazard 'alpha(x, theta, z)' on the transformed time scale 'x = Gamma(t)'.
The transformation 'Gamma' itself is the non-parametric part of the model and is handled elsewhere.

Two families are supported.
  * Generalized odds-ratio: alpha = e / (1 + eta * e * x), where e = exp(theta^T z) and 'eta' is a
    known non-negative constant. The 'eta = 0' member is the proportional hazards model, 'eta = 1'
    is the proportional odds model.
  * Linear hazard: alpha = a + x * b, where a = exp(theta_1^T z) and b = exp(theta_2^T z), and
    'theta' is the concatenation of 'theta_1' and 'theta_2'.

All methods are vectorized: 'x' is an array broadcastable against 'z[..., 0]', 'z' is an array of
shape '(..., dim_z)' and 'theta' is a vector of length 'dim_theta'.
"""

import itertools
import logging
import numpy
from transfitlibs.helperlibs.Exceptions import Error, ErrorBadConfig, ErrorOutOfBox

_LOG = logging.getLogger()

# The supported families and their configuration file names.
FAMILIES = ("odds_ratio", "linear_hazard")

class LogHazardDerivs:
    """
    The log-hazard 'ell = log(alpha)' and its derivatives at the same arguments.
      * ell - the log-hazard.
      * ell_prime - derivative of 'ell' with respect to 'x'.
      * ell_dprime - second derivative of 'ell' with respect to 'x'.
      * ell_dot - gradient of 'ell' with respect to 'theta', the last axis has 'dim_theta' elements.
    """

    def __init__(self, ell, ell_prime, ell_dprime, ell_dot):
        """The class constructor. The arguments are the attributes described in the docstring."""

        self.ell = ell
        self.ell_prime = ell_prime
        self.ell_dprime = ell_dprime
        self.ell_dot = ell_dot

class CoreModelBase:
    """
    The base class for core model families. Sub-classes implement the '_eval_*()' methods, which
    take already validated numpy arrays.
    """

    family = None

    def _eval_hazard(self, x, theta, z):
        """Evaluate the hazard, arguments are validated."""
        raise NotImplementedError()

    def _eval_derivs(self, x, theta, z):
        """Evaluate the log-hazard derivatives, arguments are validated."""
        raise NotImplementedError()

    def _eval_cum_hazard(self, x, theta, z):
        """Evaluate the cumulative hazard, arguments are validated."""
        raise NotImplementedError()

    def _eval_inverse_cum_hazard(self, a, theta, z):
        """Evaluate the inverse cumulative hazard, arguments are validated."""
        raise NotImplementedError()

    def to_spec(self):
        """Return the model specification dictionary (the inverse of 'from_spec()')."""

        return {"family": self.family, "dim_theta": self.dim_theta,
                "covariate_bound": self.covariate_bound, "theta_bound": self.theta_bound}

    def check_theta(self, theta):
        """
        Validate parameter vector 'theta' and return it as a 1-dimensional numpy array. Raise
        'ErrorOutOfBox' if 'theta' is outside of the parameter box.
        """

        theta = numpy.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.dim_theta:
            raise Error(f"bad parameter vector length {theta.shape[0]}, expected "
                        f"{self.dim_theta}")
        if not numpy.all(numpy.isfinite(theta)):
            raise Error(f"non-finite parameter vector {theta.tolist()}")
        if numpy.max(numpy.abs(theta)) > self.theta_bound:
            raise ErrorOutOfBox(f"parameter vector {theta.tolist()} is outside of the parameter "
                                f"box [-{self.theta_bound}, {self.theta_bound}]")
        return theta

    def check_z(self, z):
        """
        Validate covariates 'z' and return them as a numpy array with the last axis of length
        'dim_z'. Raise 'ErrorOutOfBox' if a covariate is outside of the covariate box.
        """

        z = numpy.asarray(z, dtype=float)
        if z.ndim == 0:
            z = z.reshape(1)
        if z.shape[-1] != self.dim_z:
            raise Error(f"bad covariate vector length {z.shape[-1]}, expected {self.dim_z}")
        if z.size and not numpy.all(numpy.isfinite(z)):
            raise Error("non-finite covariate value")
        if z.size and numpy.max(numpy.abs(z)) > self.covariate_bound:
            idx = numpy.unravel_index(numpy.argmax(numpy.abs(z)), z.shape)
            raise ErrorOutOfBox(f"covariate value {z[idx]} is outside of the covariate box "
                                f"[-{self.covariate_bound}, {self.covariate_bound}]")
        return z

    @staticmethod
    def check_x(x, name="x"):
        """Validate transformed times 'x' and return them as a numpy array."""

        x = numpy.asarray(x, dtype=float)
        if numpy.any(numpy.isnan(x)):
            raise Error(f"'{name}' is not a number")
        if numpy.any(x < 0):
            raise Error(f"negative '{name}' value {numpy.min(x)}")
        return x

    def _validate(self, x, theta, z, name="x"):
        """Validate and return all the arguments."""
        return self.check_x(x, name=name), self.check_theta(theta), self.check_z(z)

    def hazard(self, x, theta, z, check=True):
        """
        Return the hazard 'alpha(x, theta, z)'. The arguments are as follows.
          * x - transformed time values, non-negative.
          * theta - the parameter vector.
          * z - covariates, the last axis has 'dim_z' elements.
          * check - validate the arguments if 'True'. The risk-set computations validate once and
                    then evaluate with 'check=False'.
        """

        if check:
            x, theta, z = self._validate(x, theta, z)
        return self._eval_hazard(x, theta, z)

    def log_hazard_derivs(self, x, theta, z, check=True):
        """
        Return a 'LogHazardDerivs' object for the log-hazard at '(x, theta, z)'. The arguments are
        the same as in 'hazard()'.
        """

        if check:
            x, theta, z = self._validate(x, theta, z)
        return self._eval_derivs(x, theta, z)

    def cum_hazard(self, x, theta, z, check=True):
        """Return the cumulative hazard 'A(x, theta, z)', the integral of the hazard over [0, x]."""

        if check:
            x, theta, z = self._validate(x, theta, z)
        return self._eval_cum_hazard(x, theta, z)

    def inverse_cum_hazard(self, a, theta, z, check=True):
        """Return 'x' such that 'cum_hazard(x, theta, z) = a'."""

        if check:
            a, theta, z = self._validate(a, theta, z, name="a")
        return self._eval_inverse_cum_hazard(a, theta, z)

    def survival(self, x, theta, z, check=True):
        """Return the core model survival function 'F = exp(-A)'."""
        return numpy.exp(-self.cum_hazard(x, theta, z, check=check))

    def __init__(self, dim_theta, dim_z, covariate_bound=10.0, theta_bound=10.0):
        """
        The class constructor. The arguments are as follows.
          * dim_theta - dimension of the parameter vector.
          * dim_z - dimension of the covariate vector.
          * covariate_bound - covariates must satisfy '|z_j| <= covariate_bound'.
          * theta_bound - parameters must satisfy '|theta_j| <= theta_bound'.
        """

        self.dim_theta = int(dim_theta)
        self.dim_z = int(dim_z)
        self.covariate_bound = float(covariate_bound)
        self.theta_bound = float(theta_bound)

        # 'True' if the hazard does not depend on 'x', so that 'ell_prime' is identically zero.
        self.gamma_free = False

        if self.dim_theta < 1:
            raise ErrorBadConfig(f"bad 'dim_theta' value {dim_theta}, should be a positive integer")
        if not self.covariate_bound > 0 or not self.theta_bound > 0:
            raise ErrorBadConfig("'covariate_bound' and 'theta_bound' must be positive")

class GeneralizedOddsRatio(CoreModelBase):
    """The generalized odds-ratio family, 'alpha = e / (1 + eta * e * x)'."""

    family = "odds_ratio"

    def _eval_hazard(self, x, theta, z):
        """Evaluate the hazard."""

        e = numpy.exp(z @ theta)
        return e / (1 + self.eta * e * x)

    def _eval_derivs(self, x, theta, z):
        """Evaluate the log-hazard derivatives."""

        lp = z @ theta
        e = numpy.exp(lp)
        ex = self.eta * e * x
        q = 1 + ex
        lprime = -self.eta * e / q
        ell_dot = z / q[..., None] if numpy.ndim(q) else z / q
        return LogHazardDerivs(lp - numpy.log1p(ex), lprime, lprime**2, ell_dot)

    def _eval_cum_hazard(self, x, theta, z):
        """Evaluate the cumulative hazard."""

        e = numpy.exp(z @ theta)
        if self.eta == 0:
            return e * x
        return numpy.log1p(self.eta * e * x) / self.eta

    def _eval_inverse_cum_hazard(self, a, theta, z):
        """Evaluate the inverse cumulative hazard."""

        e = numpy.exp(z @ theta)
        if self.eta == 0:
            return a / e
        return numpy.expm1(self.eta * a) / (self.eta * e)

    def to_spec(self):
        """Return the model specification dictionary."""

        spec = super().to_spec()
        spec["eta"] = self.eta
        return spec

    def __init__(self, dim_theta, eta=0.0, covariate_bound=10.0, theta_bound=10.0):
        """
        The class constructor. The arguments are as follows.
          * dim_theta - dimension of the parameter and the covariate vectors.
          * eta - the known non-negative odds-ratio constant.
          * covariate_bound, theta_bound - same as in 'CoreModelBase.__init__()'.
        """

        super().__init__(dim_theta, dim_theta, covariate_bound=covariate_bound,
                         theta_bound=theta_bound)

        self.eta = float(eta)
        if not self.eta >= 0:
            raise ErrorBadConfig(f"bad 'eta' value {eta}, should be a non-negative number")

        self.gamma_free = self.eta == 0

class LinearHazard(CoreModelBase):
    """The linear hazard family, 'alpha = exp(theta_1^T z) + x * exp(theta_2^T z)'."""

    family = "linear_hazard"

    def _ab(self, theta, z):
        """Return the intercept 'a' and the slope 'b' of the hazard."""

        dim = self.dim_z
        return numpy.exp(z @ theta[:dim]), numpy.exp(z @ theta[dim:])

    def _eval_hazard(self, x, theta, z):
        """Evaluate the hazard."""

        a, b = self._ab(theta, z)
        return a + x * b

    def _eval_derivs(self, x, theta, z):
        """Evaluate the log-hazard derivatives."""

        a, b = self._ab(theta, z)
        alpha = a + x * b
        lprime = b / alpha
        wa = a / alpha
        wb = x * b / alpha
        if numpy.ndim(alpha):
            ell_dot = numpy.concatenate((z * wa[..., None], z * wb[..., None]), axis=-1)
        else:
            ell_dot = numpy.concatenate((z * wa, z * wb), axis=-1)
        return LogHazardDerivs(numpy.log(alpha), lprime, -lprime**2, ell_dot)

    def _eval_cum_hazard(self, x, theta, z):
        """Evaluate the cumulative hazard."""

        a, b = self._ab(theta, z)
        return a * x + b * x**2 / 2

    def _eval_inverse_cum_hazard(self, a, theta, z):
        """Evaluate the inverse cumulative hazard, the positive root of the quadratic."""

        inter, slope = self._ab(theta, z)
        # The cancellation-free form of '(-inter + sqrt(inter^2 + 2 * slope * a)) / slope'.
        return 2 * a / (inter + numpy.sqrt(inter**2 + 2 * slope * a))

    def __init__(self, dim_theta, covariate_bound=10.0, theta_bound=10.0):
        """
        The class constructor. The 'dim_theta' argument must be even, the first half of 'theta'
        drives the intercept and the second half drives the slope. The other arguments are the same
        as in 'CoreModelBase.__init__()'.
        """

        if int(dim_theta) < 2 or int(dim_theta) % 2:
            raise ErrorBadConfig(f"bad 'dim_theta' value {dim_theta} for the linear hazard model, "
                                 f"should be a positive even integer")

        super().__init__(dim_theta, int(dim_theta) // 2, covariate_bound=covariate_bound,
                         theta_bound=theta_bound)

def from_spec(spec):
    """
    Create and return a core model object for the model specification dictionary 'spec', for
    example '{"family": "odds_ratio", "eta": 1.0, "dim_theta": 2}'.
    """

    if not isinstance(spec, dict):
        raise ErrorBadConfig(f"bad model specification '{spec}', should be a dictionary")

    spec = dict(spec)
    family = spec.pop("family", None)
    if family not in FAMILIES:
        families = ", ".join(FAMILIES)
        raise ErrorBadConfig(f"bad model family '{family}', use one of: {families}")

    if "dim_theta" not in spec:
        raise ErrorBadConfig("the model specification does not include 'dim_theta'")

    allowed = {"dim_theta", "covariate_bound", "theta_bound"}
    if family == "odds_ratio":
        allowed.add("eta")
    unknown = set(spec) - allowed
    if unknown:
        raise ErrorBadConfig(f"unknown key(s) in the '{family}' model specification: "
                             f"{', '.join(sorted(unknown))}")

    try:
        for key, val in spec.items():
            if key == "dim_theta":
                if isinstance(val, bool) or int(val) != val:
                    raise ErrorBadConfig(f"bad 'dim_theta' value '{val}', should be an integer")
            else:
                spec[key] = float(val)
    except (TypeError, ValueError):
        raise ErrorBadConfig(f"bad value in the model specification: {spec}") from None

    if family == "odds_ratio":
        return GeneralizedOddsRatio(**spec)
    return LinearHazard(**spec)

def _box_points(box, count):
    """
    Return an array of points covering the box 'box' ('(lo, hi)' pair of vectors), 'count' points
    per dimension.
    """

    lo, hi = (numpy.asarray(val, dtype=float).reshape(-1) for val in box)
    axes = [numpy.linspace(low, high, count) for low, high in zip(lo, hi)]
    return numpy.array(list(itertools.product(*axes)))

def check_regularity(model, theta_box, z_box, x_grid):
    """
    Numerically verify the envelope conditions of the core model on a grid. The arguments are as
    follows.
      * model - the core model object.
      * theta_box - the '(lo, hi)' pair of parameter vectors.
      * z_box - the '(lo, hi)' pair of covariate vectors.
      * x_grid - increasing transformed time points.

    The checks are: all derivatives are finite, the envelopes 'sup |ell_prime|' and
    'sup |ell_dprime|' over the boxes are non-increasing in 'x', the 'sup |ell_dot|' envelope is
    bounded, and the hazard at 'x = 0' is bounded away from 0 and infinity. Return a dictionary
    with the 'passed' flag, per-check flags in 'checks', the worst offender of every failed check
    in 'worst' and the envelope bounds in 'bounds'.
    """

    report = {"passed": False, "checks": {}, "worst": {}, "bounds": {}}

    boxes_ok = all(numpy.all(numpy.isfinite(numpy.asarray(val, dtype=float)))
                   for val in (*theta_box, *z_box))
    report["checks"]["bounded_boxes"] = bool(boxes_ok)
    if not boxes_ok:
        report["worst"]["bounded_boxes"] = {"reason": "the parameter or covariate box is unbounded"}
        return report

    count = 5 if max(model.dim_theta, model.dim_z) <= 3 else 3
    thetas = _box_points(theta_box, count)
    zs = _box_points(z_box, count)
    x_grid = numpy.sort(model.check_x(x_grid).reshape(-1))

    # The envelopes over the boxes as functions of 'x', and the arg-max locations.
    nx = x_grid.shape[0]
    env = {name: numpy.full(nx, -numpy.inf) for name in ("lp", "ldp", "ldot")}
    where = {name: [None] * nx for name in env}
    finite = True
    alpha0 = []

    for theta in thetas:
        derivs = model.log_hazard_derivs(x_grid[:, None], theta, zs[None, :, :], check=False)
        vals = {"lp": numpy.abs(derivs.ell_prime), "ldp": numpy.abs(derivs.ell_dprime),
                "ldot": numpy.max(numpy.abs(derivs.ell_dot), axis=-1)}
        alpha0.append(model.hazard(0.0, theta, zs, check=False))

        for name, val in vals.items():
            if not numpy.all(numpy.isfinite(val)):
                finite = False
            idx = numpy.argmax(val, axis=1)
            best = val[numpy.arange(nx), idx]
            better = best > env[name]
            env[name][better] = best[better]
            for pos in numpy.flatnonzero(better):
                where[name][pos] = (theta, zs[idx[pos]])

    report["checks"]["finite"] = finite

    for name, check in (("lp", "ell_prime_decreasing"), ("ldp", "ell_dprime_decreasing")):
        growth = numpy.diff(env[name])
        slack = 1e-12 * numpy.maximum(1.0, numpy.abs(env[name][1:]))
        ok = bool(numpy.all(growth <= slack))
        report["checks"][check] = ok
        if not ok:
            pos = int(numpy.argmax(growth - slack)) + 1
            theta, z = where[name][pos]
            report["worst"][check] = {"theta": theta.tolist(), "z": z.tolist(),
                                      "x": float(x_grid[pos]), "increase": float(growth[pos - 1])}

    ldot_sup = float(numpy.max(env["ldot"]))
    report["checks"]["ell_dot_bounded"] = bool(numpy.isfinite(ldot_sup))

    alpha0 = numpy.concatenate(alpha0)
    m1, m2 = float(numpy.min(alpha0)), float(numpy.max(alpha0))
    report["checks"]["hazard_at_zero_bounded"] = bool(m1 > 0 and numpy.isfinite(m2))

    report["bounds"] = {"m1": m1, "m2": m2, "ell_prime_sup": float(numpy.max(env["lp"])),
                        "ell_dprime_sup": float(numpy.max(env["ldp"])), "ell_dot_sup": ldot_sup}
    report["passed"] = all(report["checks"].values())

    _LOG.debug("regularity check of the '%s' model: %s", model.family,
               "passed" if report["passed"] else "failed")
    return report
