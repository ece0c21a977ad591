#!/usr/bin/python3
#
# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""Test module for the core model families."""

import math
import numpy
import pytest
from hypothesis import given, settings, strategies as st
from transfitlibs import CoreModel
from transfitlibs.helperlibs.Exceptions import Error, ErrorBadConfig, ErrorOutOfBox

_ODDS_RATIO = {"family": "odds_ratio", "eta": 1.0, "dim_theta": 1}
_LINEAR = {"family": "linear_hazard", "dim_theta": 2}

def test_odds_ratio_values():
    """Test the odds-ratio cumulative hazard and its inverse at known points."""

    model = CoreModel.from_spec(_ODDS_RATIO)
    theta = [0.0]
    z = [0.0]

    assert model.cum_hazard(1.0, theta, z) == pytest.approx(math.log(2), abs=1e-15)
    assert model.inverse_cum_hazard(math.log(2), theta, z) == pytest.approx(1.0, abs=1e-15)
    assert model.hazard(1.0, theta, z) == pytest.approx(0.5, abs=1e-15)
    assert model.survival(1.0, theta, z) == pytest.approx(0.5, abs=1e-15)

def test_proportional_hazards():
    """Test that 'eta = 0' is the proportional hazards model."""

    model = CoreModel.from_spec({"family": "odds_ratio", "eta": 0, "dim_theta": 2})
    theta = numpy.array([0.3, -0.7])
    z = numpy.array([[0.5, 1.0], [-1.0, 0.2]])
    x = numpy.array([0.4, 2.0])

    e = numpy.exp(z @ theta)
    assert numpy.allclose(model.cum_hazard(x, theta, z), e * x, rtol=1e-14)
    derivs = model.log_hazard_derivs(x, theta, z)
    assert numpy.all(derivs.ell_prime == 0)
    assert numpy.allclose(derivs.ell_dot, z, rtol=1e-14)
    assert model.gamma_free

@pytest.mark.parametrize("spec", [_ODDS_RATIO, _LINEAR], ids=["odds_ratio", "linear_hazard"])
def test_derivatives(spec):
    """Compare the analytic derivatives with central differences."""

    model = CoreModel.from_spec(spec)
    theta = numpy.linspace(0.2, 0.6, model.dim_theta)
    z = numpy.full(model.dim_z, 0.7)
    x = 1.3
    step = 1e-6

    # The hazard is the derivative of the cumulative hazard.
    num = (model.cum_hazard(x + step, theta, z) - model.cum_hazard(x - step, theta, z)) / (2 * step)
    assert num == pytest.approx(model.hazard(x, theta, z), rel=1e-8)

    derivs = model.log_hazard_derivs(x, theta, z)
    num = (numpy.log(model.hazard(x + step, theta, z)) -
           numpy.log(model.hazard(x - step, theta, z))) / (2 * step)
    assert num == pytest.approx(derivs.ell_prime, rel=1e-7)

    for idx in range(model.dim_theta):
        shift = numpy.zeros(model.dim_theta)
        shift[idx] = step
        num = (numpy.log(model.hazard(x, theta + shift, z)) -
               numpy.log(model.hazard(x, theta - shift, z))) / (2 * step)
        assert num == pytest.approx(derivs.ell_dot[idx], rel=1e-7)

@settings(max_examples=50, deadline=None)
@given(x=st.floats(min_value=0, max_value=50), zval=st.floats(min_value=-1, max_value=1),
       tval=st.floats(min_value=-2, max_value=2), eta=st.sampled_from([0.0, 0.25, 1.0, 3.0]))
def test_inverse_cum_hazard(x, zval, tval, eta):
    """Test that the inverse cumulative hazard inverts the cumulative hazard."""

    model = CoreModel.from_spec({"family": "odds_ratio", "eta": eta, "dim_theta": 1})
    a = model.cum_hazard(x, [tval], [zval])
    assert model.inverse_cum_hazard(a, [tval], [zval]) == pytest.approx(x, rel=1e-9, abs=1e-12)

@settings(max_examples=50, deadline=None)
@given(x=st.floats(min_value=0, max_value=50), z1=st.floats(min_value=-1, max_value=1),
       t1=st.floats(min_value=-2, max_value=2), t2=st.floats(min_value=-2, max_value=2))
def test_linear_hazard_inverse(x, z1, t1, t2):
    """Same as 'test_inverse_cum_hazard()', but for the linear hazard family."""

    model = CoreModel.from_spec(_LINEAR)
    theta = [t1, t2]
    a = model.cum_hazard(x, theta, [z1])
    assert model.inverse_cum_hazard(a, theta, [z1]) == pytest.approx(x, rel=1e-9, abs=1e-12)

def test_boxes():
    """Test the parameter and covariate box checks."""

    model = CoreModel.from_spec({"family": "odds_ratio", "eta": 1, "dim_theta": 1,
                                 "covariate_bound": 1, "theta_bound": 5})

    with pytest.raises(ErrorOutOfBox):
        model.check_theta([5.5])
    with pytest.raises(ErrorOutOfBox):
        model.hazard(1.0, [0.0], [1.5])
    with pytest.raises(Error):
        model.check_theta([0.0, 1.0])
    with pytest.raises(Error):
        model.hazard(-1.0, [0.0], [0.5])

def test_bad_specs():
    """Test that bad model specifications are rejected."""

    for spec in ({"family": "weibull", "dim_theta": 1},
                 {"family": "odds_ratio"},
                 {"family": "odds_ratio", "dim_theta": 1, "eta": -1},
                 {"family": "odds_ratio", "dim_theta": 1, "shape": 2},
                 {"family": "linear_hazard", "dim_theta": 3},
                 {"family": "linear_hazard", "dim_theta": 2, "eta": 1},
                 "odds_ratio"):
        with pytest.raises(ErrorBadConfig):
            CoreModel.from_spec(spec)

def test_spec_round_trip():
    """Test that 'to_spec()' produces a specification 'from_spec()' accepts."""

    for spec in (_ODDS_RATIO, _LINEAR):
        model = CoreModel.from_spec(spec)
        again = CoreModel.from_spec(model.to_spec())
        assert again.to_spec() == model.to_spec()

def test_regularity():
    """Test the regularity check of both families over bounded boxes."""

    grid = numpy.linspace(0, 20, 41)
    for spec in (_ODDS_RATIO, _LINEAR):
        model = CoreModel.from_spec(spec)
        box = (-numpy.ones(model.dim_theta), numpy.ones(model.dim_theta))
        zbox = (-numpy.ones(model.dim_z), numpy.ones(model.dim_z))
        report = CoreModel.check_regularity(model, box, zbox, grid)
        assert report["passed"], report

    model = CoreModel.from_spec(_ODDS_RATIO)
    report = CoreModel.check_regularity(model, ([-numpy.inf], [1.0]), ([-1.0], [1.0]), grid)
    assert not report["passed"]
    assert not report["checks"]["bounded_boxes"]
