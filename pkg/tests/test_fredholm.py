#!/usr/bin/python3
#
# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""Test module for the Fredholm equation solver."""

from types import SimpleNamespace
import numpy
import pytest
from common import simulate
from transfitlibs import Empirical, Fredholm
from transfitlibs.helperlibs.Exceptions import Error, ErrorOverflow

_CENS = {"type": "independent_with_atom", "tau0": 3.0, "atom": 0.2}

def _random_system(rng, m):
    """Return a random Fredholm system with 'm' grid points."""

    grid = numpy.cumsum(rng.uniform(0.01, 1, m))
    dc = rng.uniform(0, 2, m) / m
    db = rng.uniform(0, 4, m) / m
    return Fredholm.FredholmSystem.from_measures(grid, dc, db)

def test_toy_values():
    """Test the interval functions of a two-point system against hand-computed values."""

    system = Fredholm.FredholmSystem.from_measures([1.0, 2.0], [0.2, 0.3], [1.0, 2.0])

    assert system.psi0_total == pytest.approx(2.32, abs=1e-14)
    assert system.psi0_to_end.tolist() == pytest.approx([1.6, 1.0], abs=1e-14)
    assert system.psi1_from0.tolist() == pytest.approx([0.2, 0.56], abs=1e-14)
    assert system.kappa == pytest.approx(1.2, abs=1e-14)
    assert Fredholm.resolvent(system, 0, 1) == pytest.approx(0.2 / 2.32, abs=1e-14)
    assert Fredholm.resolvent(system, 1, 0) == pytest.approx(0.2 / 2.32, abs=1e-14)

    tables = Fredholm.psi_tables(system)
    assert tables["psi0"][0, 2] == pytest.approx(2.32, abs=1e-14)
    assert tables["psi1"][0, 2] == pytest.approx(0.56, abs=1e-14)
    assert tables["psi2"][0, 2] == pytest.approx(1.3, abs=1e-14)
    assert tables["psi3"][0, 2] == pytest.approx(3.6, abs=1e-14)
    assert numpy.isnan(tables["psi0"][2, 0])

    single = Fredholm.FredholmSystem.from_measures([1.0], [0.5], [2.0])
    assert Fredholm.resolvent(single, 0, 0) == pytest.approx(0.25, abs=1e-15)
    assert Fredholm.kernel_l2_surrogate(single) == pytest.approx(1.0, abs=1e-15)

def test_kernel_l2_surrogate():
    """Compare the kernel norm surrogate with the dense double sum."""

    system = _random_system(numpy.random.default_rng(3), 40)
    kern = system.kernel()
    dense = float(system.db @ (kern**2) @ system.db)
    assert Fredholm.kernel_l2_surrogate(system) == pytest.approx(dense, rel=1e-12)

def test_resolvent_vs_dense():
    """Compare the resolvent recursions with the dense solver on random systems."""

    rng = numpy.random.default_rng(5)
    for _ in range(50):
        m = int(rng.integers(1, 501))
        system = _random_system(rng, m)
        rhs = rng.normal(size=(m, 2))

        psi = system.apply_resolvent(rhs)
        dense = Fredholm.solve_dense_oracle(system, system.kernel() @ rhs)
        scale = max(1.0, float(numpy.max(numpy.abs(dense))))
        assert numpy.max(numpy.abs(psi - dense)) <= 1e-8 * scale

def test_tridiagonal():
    """Compare the tridiagonal route with the dense solver."""

    rng = numpy.random.default_rng(7)
    for m in (1, 2, 10, 200):
        grid = numpy.arange(1, m + 1, dtype=float)
        dc = rng.uniform(0.5, 2, m) / m
        db = rng.uniform(0, 4, m) / m
        system = Fredholm.FredholmSystem.from_measures(grid, dc, db)
        rhs = system.kernel() @ rng.normal(size=m)

        dense = Fredholm.solve_dense_oracle(system, rhs)
        tridiag = Fredholm.solve_tridiagonal(system, rhs)
        scale = max(1.0, float(numpy.max(numpy.abs(dense))))
        assert numpy.max(numpy.abs(tridiag - dense)) <= 1e-9 * scale

def test_psi_identities():
    """Test the identities between the interval functions on random systems."""

    rng = numpy.random.default_rng(9)
    for m in (1, 2, 7, 30, 120):
        errors = Fredholm.psi_identity_errors(_random_system(rng, m))
        for name, err in errors.items():
            assert err <= 1e-10, f"identity '{name}' error {err} with {m} grid points"

def _sample_system(eta, seed):
    """Return the '(funcs, system, d_f)' tuple for a simulated sample."""

    spec = {"family": "odds_ratio", "eta": eta, "dim_theta": 1}
    sample, config = simulate(spec, [0.8], 300, seed, censoring=_CENS)
    gamma = config.gamma0(sample.event_times)
    funcs = Empirical.conditional_moments(sample, config.model, gamma, config.theta0)
    d_f = Empirical.d_volterra(funcs, funcs.s_f)
    return funcs, Fredholm.build_system(funcs), d_f

def test_solve_phi():
    """Test the Fredholm solution for sample functionals."""

    funcs, system, d_f = _sample_system(1.0, 21)
    sol = Fredholm.solve_phi(system, funcs, d_f)

    assert sol.route == "recursion"
    assert sol.residual <= 1e-8
    assert sol.phi.shape == (funcs.grid.shape[0], 1)
    assert system.kappa > 0

    p0 = numpy.exp(system.logP0)[:, None]
    rhs = p0 * (funcs.cov_f_lp + funcs.var_lp[:, None] * d_f.values) * funcs.dN[:, None]
    dense = -d_f.values + p0 * Fredholm.solve_dense_oracle(system, system.kernel() @ rhs)
    scale = max(1.0, float(numpy.max(numpy.abs(dense))))
    assert numpy.max(numpy.abs(sol.phi - dense)) <= 1e-8 * scale

def test_proportional_hazards_phi():
    """Test that the Fredholm solution is '-D[f]' under proportional hazards."""

    funcs, system, d_f = _sample_system(0.0, 22)
    sol = Fredholm.solve_phi(system, funcs, d_f)

    assert system.kappa == 0
    assert numpy.array_equal(sol.phi, -d_f.values)
    assert numpy.all(sol.rho_tilde == 0)

def test_bad_systems():
    """Test the system validation and the overflow detection."""

    with pytest.raises(Error):
        Fredholm.FredholmSystem.from_measures([1.0, 2.0], [0.1, -0.1], [1.0, 1.0])
    with pytest.raises(Error):
        Fredholm.FredholmSystem.from_measures([1.0, 2.0], [0.1], [1.0, 1.0])

    system = Fredholm.FredholmSystem.from_measures([1.0, 2.0], [0.0, 0.1], [1.0, 1.0])
    with pytest.raises(Error):
        Fredholm.solve_tridiagonal(system, numpy.ones(2))

    m = 400
    with pytest.raises(ErrorOverflow):
        Fredholm.FredholmSystem.from_measures(numpy.arange(1, m + 1), numpy.full(m, 1e100),
                                              numpy.full(m, 1e100))

    funcs = SimpleNamespace(logP0=numpy.array([0.0, 2 * Fredholm.LOGP_LIMIT]))
    with pytest.raises(ErrorOverflow):
        Fredholm.build_system(funcs)

def test_resolvent_identity():
    """Test 'K = Delta + int Delta K dB' for the resolvent in the original scale."""

    funcs, system, _ = _sample_system(1.0, 23)
    m = funcs.grid.shape[0]
    idx = numpy.arange(m)
    p0 = numpy.exp(system.logP0)
    pp = numpy.outer(p0, p0)

    kern = pp * system.kernel()
    delta = pp * Fredholm.resolvent(system, idx[:, None], idx[None, :])
    res = kern - delta - delta @ (funcs.dB[:, None] * kern)
    assert numpy.max(numpy.abs(res)) <= 1e-9 * max(1.0, float(numpy.max(numpy.abs(kern))))

def test_operator_eigenvalues():
    """Test that the eigenvalues of 'I + K B' are at least 1."""

    rng = numpy.random.default_rng(11)
    systems = [_random_system(rng, m) for m in (1, 5, 60, 300)]
    systems.append(_sample_system(1.0, 24)[1])

    for system in systems:
        # 'I + k diag(db)' is similar to the symmetric 'I + sqrt(db) k sqrt(db)'.
        root = numpy.sqrt(system.db)
        sym = root[:, None] * system.kernel() * root[None, :]
        eigvals = numpy.linalg.eigvalsh((sym + sym.T) / 2) + 1
        assert numpy.min(eigvals) > 1 - 1e-12

        eigvals = numpy.linalg.eigvals(Fredholm.dense_operator(system))
        assert numpy.min(eigvals.real) > 1 - 1e-9
