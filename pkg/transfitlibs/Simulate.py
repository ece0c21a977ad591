# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the censored data simulator. Failure times are drawn from a transformation
model with known '(theta0, Gamma0)', censoring times are drawn from a mechanism that is
conditionally independent of the failure time given the covariates.

Records are generated in blocks of 'BLOCK_SIZE' records. Block 'b' uses its own 'Philox' stream,
obtained by jumping the seeded stream 'b + 1' times, so the output depends only on the seed and the
record index.
"""

import logging
import numpy
import pandas
from transfitlibs import CoreModel
from transfitlibs.helperlibs.Exceptions import Error, ErrorBadConfig

_LOG = logging.getLogger()

# Name of the random numbers generator, written to the dataset metadata.
RNG_NAME = "numpy-philox-4x64"
# How many records are generated from one random stream.
BLOCK_SIZE = 8192

def _get_float(dct, key, default=None, where=""):
    """Fetch float 'key' from 'dct', raise 'ErrorBadConfig' if it is missing or not a number."""

    val = dct.get(key, default)
    if val is None:
        raise ErrorBadConfig(f"the {where} specification does not include '{key}'")
    if isinstance(val, bool):
        raise ErrorBadConfig(f"bad '{key}' value '{val}' in the {where} specification")
    try:
        return float(val)
    except (TypeError, ValueError):
        raise ErrorBadConfig(f"bad '{key}' value '{val}' in the {where} specification, should be "
                             f"a number") from None

def _check_keys(dct, allowed, where):
    """Raise 'ErrorBadConfig' if dictionary 'dct' has keys not in 'allowed'."""

    if not isinstance(dct, dict):
        raise ErrorBadConfig(f"bad {where} specification '{dct}', should be a dictionary")
    unknown = set(dct) - set(allowed)
    if unknown:
        raise ErrorBadConfig(f"unknown key(s) in the {where} specification: "
                             f"{', '.join(sorted(unknown))}")

class GammaMap:
    """
    A known transformation 'Gamma0': strictly increasing, continuous, 'Gamma0(0) = 0'. Supported
    forms: 'identity', 'power' ('t^p') and 'log1p' ('log(1 + t)').
    """

    def __call__(self, t):
        """Evaluate the transformation."""

        t = numpy.asarray(t, dtype=float)
        if self.form == "identity":
            return t
        if self.form == "power":
            return t**self.p
        return numpy.log1p(t)

    def inverse(self, x):
        """Evaluate the inverse transformation."""

        x = numpy.asarray(x, dtype=float)
        if self.form == "identity":
            return x
        if self.form == "power":
            return x**(1 / self.p)
        return numpy.expm1(x)

    def to_spec(self):
        """Return the transformation specification dictionary."""

        if self.form == "power":
            return {"form": self.form, "p": self.p}
        return {"form": self.form}

    @classmethod
    def from_spec(cls, spec):
        """Create a 'GammaMap' object from specification dictionary 'spec'."""

        if spec is None:
            return cls()
        _check_keys(spec, ("form", "p"), "'gamma0'")
        form = spec.get("form", "identity")
        if form == "power":
            return cls(form, p=_get_float(spec, "p", where="'gamma0'"))
        if "p" in spec:
            raise ErrorBadConfig(f"the 'p' key is only allowed for the 'power' form, not '{form}'")
        return cls(form)

    def __init__(self, form="identity", p=1.0):
        """
        The class constructor. The arguments are as follows.
          * form - the transformation form name.
          * p - the exponent of the 'power' form.
        """

        if form not in ("identity", "power", "log1p"):
            raise ErrorBadConfig(f"bad 'gamma0' form '{form}', use one of: identity, power, log1p")
        if form == "power" and not p > 0:
            raise ErrorBadConfig(f"bad 'gamma0' power {p}, should be positive")

        self.form = form
        self.p = float(p)

class CovariateLaw:
    """
    The covariate distribution: i.i.d. uniform components on a box, or a discrete law on a finite
    set of covariate vectors.
    """

    def draw(self, rng, count):
        """Draw 'count' covariate vectors, return an array of shape '(count, dim)'."""

        if self.law == "uniform":
            return rng.uniform(self.low, self.high, size=(count, self.dim))
        idx = rng.choice(self.values.shape[0], size=count, p=self.probs)
        return self.values[idx]

    def bound(self):
        """Return the largest absolute covariate value the law can produce."""

        if self.law == "uniform":
            return max(abs(self.low), abs(self.high))
        return float(numpy.max(numpy.abs(self.values)))

    def to_spec(self):
        """Return the covariate law specification dictionary."""

        if self.law == "uniform":
            return {"law": "uniform", "low": self.low, "high": self.high}
        return {"law": "discrete", "values": self.values.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_spec(cls, spec, dim):
        """Create a covariate law object of dimension 'dim' from specification dictionary 'spec'."""

        if spec is None:
            return cls(dim)
        _check_keys(spec, ("law", "low", "high", "values", "probs"), "'covariates'")
        law = spec.get("law", "uniform")
        if law == "uniform":
            low = _get_float(spec, "low", -1.0, where="'covariates'")
            high = _get_float(spec, "high", 1.0, where="'covariates'")
            return cls(dim, low=low, high=high)
        if law == "discrete":
            if "values" not in spec or "probs" not in spec:
                raise ErrorBadConfig("the discrete covariate law requires 'values' and 'probs'")
            return cls(dim, law="discrete", values=spec["values"], probs=spec["probs"])
        raise ErrorBadConfig(f"bad covariate law '{law}', use one of: uniform, discrete")

    def __init__(self, dim, law="uniform", low=-1.0, high=1.0, values=None, probs=None):
        """
        The class constructor. The arguments are as follows.
          * dim - the covariate dimension.
          * law - "uniform" or "discrete".
          * low, high - the uniform law component range.
          * values - the discrete law support, a list of covariate vectors.
          * probs - the discrete law probabilities.
        """

        self.dim = dim
        self.law = law
        self.low = float(low)
        self.high = float(high)
        self.values = None
        self.probs = None

        if law == "uniform":
            if not low < high or not numpy.isfinite(low) or not numpy.isfinite(high):
                raise ErrorBadConfig(f"bad uniform covariate range [{low}, {high}]")
            return

        try:
            self.values = numpy.array(values, dtype=float).reshape(len(values), -1)
            self.probs = numpy.array(probs, dtype=float).reshape(-1)
        except (TypeError, ValueError):
            raise ErrorBadConfig("bad discrete covariate law 'values' or 'probs'") from None

        if self.values.shape[1] != dim:
            raise ErrorBadConfig(f"discrete covariate law values have dimension "
                                 f"{self.values.shape[1]}, expected {dim}")
        if self.probs.shape[0] != self.values.shape[0]:
            raise ErrorBadConfig("discrete covariate law 'values' and 'probs' lengths differ")
        if numpy.any(self.probs < 0) or abs(numpy.sum(self.probs) - 1) > 1e-9:
            raise ErrorBadConfig("discrete covariate law 'probs' must be non-negative and sum to 1")
        self.probs = self.probs / numpy.sum(self.probs)

class NoCensoring:
    """No censoring at all, every failure time is observed."""

    kind = "none"
    tau0 = None

    def draw(self, config, z, rng): # pylint: disable=unused-argument
        """Return infinite censoring times."""
        return numpy.full(z.shape[0], numpy.inf)

    def to_spec(self):
        """Return the censoring specification dictionary."""
        return {"type": self.kind}

class KoziolGreen:
    """
    The Koziol-Green censoring: the conditional censoring survival function is 'F(Gamma0(t))^a',
    where 'F' is the core model survival function. The 'a = 0' case is no censoring.
    """

    kind = "koziol_green"
    tau0 = None

    def draw(self, config, z, rng):
        """Draw censoring times for covariates 'z'."""

        expo = rng.standard_exponential(z.shape[0])
        if self.a == 0:
            return numpy.full(z.shape[0], numpy.inf)
        xval = config.model.inverse_cum_hazard(expo / self.a, config.theta0, z)
        return config.gamma0.inverse(xval)

    def to_spec(self):
        """Return the censoring specification dictionary."""
        return {"type": self.kind, "a": self.a}

    def __init__(self, a):
        """The class constructor. The 'a' argument is the non-negative Koziol-Green exponent."""

        if not a >= 0:
            raise ErrorBadConfig(f"bad Koziol-Green exponent {a}, should be non-negative")
        self.a = float(a)

class IndependentWithAtom:
    """
    Censoring independent of the covariates, with an atom at the upper support point 'tau0': with
    probability 'atom' the censoring time is 'tau0', otherwise it is a continuous draw (uniform on
    '(0, tau0)' or exponential with rate 'rate') capped at 'tau0'.
    """

    kind = "independent_with_atom"

    def draw(self, config, z, rng): # pylint: disable=unused-argument
        """Draw censoring times."""

        count = z.shape[0]
        hit = rng.random(count) < self.atom
        if self.law == "uniform":
            cont = rng.uniform(0.0, self.tau0, size=count)
        else:
            cont = rng.exponential(1 / self.rate, size=count)
        return numpy.where(hit, self.tau0, numpy.minimum(cont, self.tau0))

    def to_spec(self):
        """Return the censoring specification dictionary."""

        spec = {"type": self.kind, "tau0": self.tau0, "atom": self.atom, "law": self.law}
        if self.law == "exponential":
            spec["rate"] = self.rate
        return spec

    def __init__(self, tau0, atom, law="uniform", rate=1.0):
        """
        The class constructor. The arguments are as follows.
          * tau0 - the upper support point of the censoring law.
          * atom - the probability mass at 'tau0', in '(0, 1]'.
          * law - the continuous part, "uniform" or "exponential".
          * rate - the exponential law rate.
        """

        if not tau0 > 0 or not numpy.isfinite(tau0):
            raise ErrorBadConfig(f"bad censoring 'tau0' value {tau0}, should be positive")
        if not 0 < atom <= 1:
            raise ErrorBadConfig(f"bad censoring 'atom' value {atom}, should be in (0, 1]")
        if law not in ("uniform", "exponential"):
            raise ErrorBadConfig(f"bad censoring law '{law}', use one of: uniform, exponential")
        if law == "exponential" and not rate > 0:
            raise ErrorBadConfig(f"bad censoring 'rate' value {rate}, should be positive")

        self.tau0 = float(tau0)
        self.atom = float(atom)
        self.law = law
        self.rate = float(rate)

def censoring_from_spec(spec):
    """Create and return a censoring mechanism object from specification dictionary 'spec'."""

    if spec is None:
        return NoCensoring()

    _check_keys(spec, ("type", "a", "tau0", "atom", "law", "rate"), "'censoring'")
    kind = spec.get("type", "none")
    if kind == "none":
        _check_keys(spec, ("type",), "'none' censoring")
        return NoCensoring()
    if kind == "koziol_green":
        _check_keys(spec, ("type", "a"), "Koziol-Green censoring")
        return KoziolGreen(_get_float(spec, "a", where="Koziol-Green censoring"))
    if kind == "independent_with_atom":
        where = "'independent_with_atom' censoring"
        _check_keys(spec, ("type", "tau0", "atom", "law", "rate"), where)
        return IndependentWithAtom(_get_float(spec, "tau0", where=where),
                                   _get_float(spec, "atom", where=where),
                                   law=spec.get("law", "uniform"),
                                   rate=_get_float(spec, "rate", 1.0, where=where))
    raise ErrorBadConfig(f"bad censoring type '{kind}', use one of: none, koziol_green, "
                         f"independent_with_atom")

class SimConfig:
    """
    The simulation configuration. The public attributes are as follows.
      * model - the core model object.
      * theta0 - the true parameter vector.
      * gamma0 - the true transformation ('GammaMap' object).
      * covariates - the covariate law ('CovariateLaw' object).
      * censoring - the censoring mechanism object.
      * n - the sample size.
      * seed - the 64-bit random seed.
    """

    def to_dict(self):
        """Return the configuration as a dictionary suitable for 'from_dict()'."""

        return {"model": self.model.to_spec(), "theta0": self.theta0.tolist(),
                "gamma0": self.gamma0.to_spec(), "covariates": self.covariates.to_spec(),
                "censoring": self.censoring.to_spec(), "n": self.n, "seed": self.seed}

    def with_seed(self, seed, n=None):
        """Return a copy of the configuration with a different seed (and sample size)."""

        return SimConfig(self.model, self.theta0, gamma0=self.gamma0, covariates=self.covariates,
                         censoring=self.censoring, n=self.n if n is None else n, seed=seed)

    @classmethod
    def from_dict(cls, cfg, seed=None, n=None):
        """
        Create a 'SimConfig' object from configuration dictionary 'cfg'. Keys not related to
        simulation are ignored. The 'seed' and 'n' arguments override the configuration values.
        """

        if not isinstance(cfg, dict):
            raise ErrorBadConfig("the configuration must be a dictionary")
        if "model" not in cfg:
            raise ErrorBadConfig("the configuration does not include the 'model' section")
        if "theta0" not in cfg:
            raise ErrorBadConfig("the configuration does not include 'theta0'")

        model = CoreModel.from_spec(cfg["model"])
        try:
            theta0 = numpy.array(cfg["theta0"], dtype=float).reshape(-1)
        except (TypeError, ValueError):
            raise ErrorBadConfig(f"bad 'theta0' value '{cfg['theta0']}'") from None

        if seed is None:
            seed = cfg.get("seed", 0)
        if n is None:
            n = cfg.get("n", 1000)

        return cls(model, theta0, gamma0=GammaMap.from_spec(cfg.get("gamma0")),
                   covariates=CovariateLaw.from_spec(cfg.get("covariates"), model.dim_z),
                   censoring=censoring_from_spec(cfg.get("censoring")), n=n, seed=seed)

    def __init__(self, model, theta0, gamma0=None, covariates=None, censoring=None, n=1000,
                 seed=0):
        """The class constructor. The arguments are the attributes described in the docstring."""

        self.model = model
        if isinstance(n, bool) or not isinstance(n, (int, numpy.integer)) or n < 1:
            raise ErrorBadConfig(f"bad sample size '{n}', should be a positive integer")
        if isinstance(seed, bool) or not isinstance(seed, (int, numpy.integer)) or \
           not 0 <= seed < 2**64:
            raise ErrorBadConfig(f"bad seed '{seed}', should be an integer in [0, 2^64)")

        try:
            self.theta0 = model.check_theta(theta0)
        except Error as err:
            raise ErrorBadConfig(f"bad 'theta0' value:\n{err}") from None

        self.gamma0 = gamma0 if gamma0 is not None else GammaMap()
        self.covariates = covariates if covariates is not None else CovariateLaw(model.dim_z)
        self.censoring = censoring if censoring is not None else NoCensoring()
        self.n = int(n)
        self.seed = int(seed)

        if self.covariates.dim != model.dim_z:
            raise ErrorBadConfig(f"covariate law dimension {self.covariates.dim} does not match "
                                 f"the model covariate dimension {model.dim_z}")
        if self.covariates.bound() > model.covariate_bound:
            raise ErrorBadConfig(f"the covariate law produces values up to "
                                 f"{self.covariates.bound()}, which is outside of the model "
                                 f"covariate box [-{model.covariate_bound}, "
                                 f"{model.covariate_bound}]")

def block_rng(seed, block):
    """Return the random numbers generator for records block number 'block'."""
    return numpy.random.Generator(numpy.random.Philox(key=seed).jumped(block + 1))

def draw_failure(model, theta0, gamma0, z, rng=None, expo=None):
    """
    Draw failure times for covariates 'z'. The conditional cumulative hazard of the result is
    'A(Gamma0(t), theta0 | z)'. The arguments are as follows.
      * model, theta0, gamma0 - the core model, the true parameter and the true transformation.
      * z - covariates, an array of shape '(count, dim_z)' or a single covariate vector.
      * rng - the random numbers generator to draw the standard exponential variables from.
      * expo - the standard exponential variables to use instead of drawing them from 'rng'.
    """

    z = numpy.asarray(z, dtype=float)
    if expo is None:
        expo = rng.standard_exponential(z.shape[:-1])
    xval = model.inverse_cum_hazard(expo, theta0, z)
    return gamma0.inverse(xval)

def draw_censoring(config, z, rng):
    """Draw censoring times for covariates 'z' according to 'config.censoring'."""
    return config.censoring.draw(config, numpy.atleast_2d(z), rng)

def _simulate_block(config, block, count):
    """Simulate 'count' records of block 'block', return '(x, delta, z)'."""

    rng = block_rng(config.seed, block)
    z = config.covariates.draw(rng, count)
    fail = draw_failure(config.model, config.theta0, config.gamma0, z, rng)
    cens = draw_censoring(config, z, rng)
    delta = (fail <= cens).astype(int)
    return numpy.minimum(fail, cens), delta, z

def simulate_sample(config):
    """
    Simulate 'config.n' i.i.d. censored records. Return a 'pandas.DataFrame' with the 'x', 'delta',
    'z1', ... columns.
    """

    xs, deltas, zs = [], [], []
    for block, start in enumerate(range(0, config.n, BLOCK_SIZE)):
        count = min(BLOCK_SIZE, config.n - start)
        x, delta, z = _simulate_block(config, block, count)
        xs.append(x)
        deltas.append(delta)
        zs.append(z)

    x = numpy.concatenate(xs)
    if not numpy.all(numpy.isfinite(x)):
        raise ErrorBadConfig("the simulated withdrawal times are not finite")

    data = {"x": x, "delta": numpy.concatenate(deltas)}
    z = numpy.concatenate(zs)
    for idx in range(z.shape[1]):
        data[f"z{idx + 1}"] = z[:, idx]

    df = pandas.DataFrame(data)
    _LOG.debug("simulated %d records, %d failures", config.n, int(df["delta"].sum()))
    return df
