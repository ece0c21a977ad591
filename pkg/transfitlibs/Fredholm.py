# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the Fredholm equation solver for the efficient score weight 'phi'.

Multiplying the equation by 'P(0, t)^-1' turns the kernel 'K(t, u) = P(0, t) P(0, u) c(t ^ u)' into
'c(t ^ u)', where 'c' has jumps 'dc = dC / P(0, t)^2' and the perturbing measure 'b' has jumps
'db = P(0, t)^2 dB'. The resolvent of the transformed equation is

    R(s, t) = Psi1(0, s ^ t) * Psi0(s v t, tau0) / Psi0(0, tau0),

where 'Psi0' and 'Psi1' are the interval functions defined by Volterra equations in 'c' and
'b'. They are evaluated on the grid by 'O(m)' prefix and suffix recursions. The dense 'm x m'
solve and the tridiagonal route are kept as reference solvers.

Grid point 'k' (0-based) carries the atoms 'dc[k]' and 'db[k]'. The '(s, t]' interval functions
exclude the atom at 's' and include the atom at 't'.
"""

import logging
import numpy
import scipy.linalg
from transfitlibs.StepFunction import StepFunction
from transfitlibs.helperlibs.Exceptions import Error, ErrorNotConverged, ErrorOverflow

_LOG = logging.getLogger()

# The largest allowed '|log P(0, t)|' on the grid.
LOGP_LIMIT = 300.0
# The largest grid the dense reference solver accepts.
DENSE_MAX = 2000
# The Fredholm residual tolerance.
RESIDUAL_TOL = 1e-8

class FredholmSystem:
    """
    The transformed Fredholm system on a grid. The public attributes are as follows.
      * grid - the grid points.
      * dc, db - the atoms of the 'c' and 'b' measures.
      * c, b - the cumulative 'c' and 'b' values.
      * logP0 - 'log P(0, t_k)' values used for the transformation.
      * psi1_from0 - 'Psi1(0, t_k)'.
      * psi0_to_end - 'Psi0(t_k, tau0)'.
      * psi0_total - 'Psi0(0, tau0)'.
      * kappa_curve - 'kappa(t_k) = int_(0,t_k] c db'.
      * kappa - 'kappa(tau0)'.
    """

    def kernel(self):
        """Return the dense transformed kernel matrix 'c(t_i ^ t_j)'."""

        idx = numpy.arange(self.grid.shape[0])
        return self.c[numpy.minimum.outer(idx, idx)]

    def apply_resolvent(self, rhs):
        """
        Return 'sum_j R(t_i, t_j) rhs_j' for every 'i' in 'O(m)'. The 'rhs' argument has the grid
        axis first.
        """

        rhs = numpy.asarray(rhs, dtype=float)
        shape = (-1,) + (1,) * (rhs.ndim - 1)
        u = self.psi1_from0.reshape(shape)
        v = self.psi0_to_end.reshape(shape)

        left = numpy.cumsum(u * rhs, axis=0)
        right = numpy.cumsum((v * rhs)[::-1], axis=0)[::-1]
        # Sum over 'j > i' only.
        right = numpy.concatenate((right[1:], numpy.zeros_like(right[:1])))
        return (v * left + u * right) / self.psi0_total

    def _recursions(self):
        """Run the forward 'Psi1(0, .)' and the backward 'Psi0(., tau0)' recursions."""

        m = self.grid.shape[0]
        gam, bet = self.dc, self.db

        # Forward: 'u' is 'Psi1(0, t_k)', 'p' is 'Psi0(0, t_{k-1})'.
        u = numpy.empty(m)
        p, acc = 1.0, 0.0
        for k in range(m):
            acc += gam[k] * p
            u[k] = acc
            p += bet[k] * acc

        # Backward: 'v[k]' is 'Psi0(t_k, tau0)', 'v0' is 'Psi0(0, tau0)'.
        v = numpy.empty(m)
        vk, h = 1.0, 0.0
        for k in range(m - 1, -1, -1):
            v[k] = vk
            h += bet[k] * vk
            vk += gam[k] * h

        self.psi1_from0 = u
        self.psi0_to_end = v
        self.psi0_total = vk

        if not numpy.isfinite(vk) or not numpy.all(numpy.isfinite(u)):
            raise ErrorOverflow("the Fredholm interval functions overflow, the 'kappa' "
                                "integrability condition is likely violated")

    @classmethod
    def from_measures(cls, grid, dc, db, logP0=None):
        """
        Create a system directly from the atoms of the transformed measures. The arguments are as
        follows.
          * grid - the grid points.
          * dc - the non-negative atoms of 'c'.
          * db - the non-negative atoms of 'b'.
          * logP0 - 'log P(0, t_k)' values, zeros by default.
        """
        return cls(grid, dc, db, logP0=logP0)

    def __init__(self, grid, dc, db, logP0=None):
        """
        The class constructor. The arguments are the same as in 'from_measures()'. Use
        'build_system()' to create the system for sample functionals.
        """

        self.grid = numpy.asarray(grid, dtype=float)
        self.dc = numpy.asarray(dc, dtype=float)
        self.db = numpy.asarray(db, dtype=float)
        m = self.grid.shape[0]

        if logP0 is None:
            logP0 = numpy.zeros(m)
        self.logP0 = numpy.asarray(logP0, dtype=float)

        if self.dc.shape != (m,) or self.db.shape != (m,) or self.logP0.shape != (m,):
            raise Error("the Fredholm system measures do not match the grid")
        if numpy.any(self.dc < 0) or numpy.any(self.db < 0):
            raise Error("the Fredholm system measures must be non-negative")

        self.c = numpy.cumsum(self.dc)
        self.b = numpy.cumsum(self.db)
        self.kappa_curve = numpy.cumsum(self.c * self.db)
        self.kappa = float(self.kappa_curve[-1]) if m else 0.0

        self.psi1_from0 = None
        self.psi0_to_end = None
        self.psi0_total = None
        self._recursions()

def build_system(funcs):
    """Build and return the transformed 'FredholmSystem' for 'Functionals' object 'funcs'."""

    logp = funcs.logP0
    worst = float(numpy.max(numpy.abs(logp))) if logp.size else 0.0
    if worst > LOGP_LIMIT:
        raise ErrorOverflow(f"'|log P(0, t)|' reaches {worst:.4g} on the grid, which exceeds the "
                            f"limit of {LOGP_LIMIT}, the 'kappa' integrability condition is likely "
                            f"violated")

    p0sq = numpy.exp(2 * logp)
    system = FredholmSystem(funcs.grid, funcs.dC / p0sq, funcs.dB * p0sq, logP0=logp)
    _LOG.debug("Fredholm system: %d grid points, kappa %.6g, Psi0(0, tau0) %.6g",
               funcs.grid.shape[0], system.kappa, system.psi0_total)
    return system

def resolvent(system, s, t):
    """
    Return the transformed resolvent 'R(t_s, t_t)' for grid indices 's' and 't' (numbers or
    arrays).
    """

    s = numpy.asarray(s)
    t = numpy.asarray(t)
    lo = numpy.minimum(s, t)
    hi = numpy.maximum(s, t)
    return system.psi1_from0[lo] * system.psi0_to_end[hi] / system.psi0_total

def dense_operator(system):
    """Return the dense matrix 'I + k diag(db)' of the transformed equation."""

    m = system.grid.shape[0]
    if m > DENSE_MAX:
        raise Error(f"the grid has {m} points, the dense solver supports at most {DENSE_MAX}")
    return numpy.eye(m) + system.kernel() * system.db[None, :]

def solve_dense_oracle(system, rhs):
    """
    Solve '(I + k diag(db)) psi = rhs' by dense linear algebra and return 'psi'. The 'rhs' argument
    has the grid axis first.
    """

    oper = dense_operator(system)
    try:
        return numpy.linalg.solve(oper, numpy.asarray(rhs, dtype=float))
    except numpy.linalg.LinAlgError as err:
        raise Error(f"internal error: the Fredholm operator is singular:\n{err}") from None

def solve_tridiagonal(system, rhs):
    """
    Solve '(I + k diag(db)) psi = rhs' by the tridiagonal route and return 'psi'. The inverse of the
    kernel matrix 'c(t_i ^ t_j)' is tridiagonal, so the equation becomes
    '(k^-1 + diag(db)) psi = k^-1 rhs', a banded system. All 'dc' atoms must be positive.
    """

    gam = system.dc
    if numpy.any(gam <= 0):
        raise Error("the tridiagonal route requires positive 'c' atoms at every grid point")

    inv = 1 / gam
    m = gam.shape[0]
    diag = inv.copy()
    diag[:-1] += inv[1:]
    off = -inv[1:]

    rhs = numpy.asarray(rhs, dtype=float)
    shape = (-1,) + (1,) * (rhs.ndim - 1)
    # The product of the tridiagonal matrix and 'rhs'.
    trhs = diag.reshape(shape) * rhs
    trhs[:-1] += off.reshape(shape) * rhs[1:]
    trhs[1:] += off.reshape(shape) * rhs[:-1]

    banded = numpy.zeros((3, m))
    banded[0, 1:] = off
    banded[1] = diag + system.db
    banded[2, :-1] = off
    return scipy.linalg.solve_banded((1, 1), banded, trhs)

def psi_tables(system):
    """
    Compute all four interval functions on every grid range. Return a dictionary with "psi0",
    "psi1", "psi2" and "psi3" arrays of shape '(m + 1, m + 1)': entry '[a, b]' is the interval
    function over the atoms 'a, ..., b - 1' ('NaN' for 'b < a'). In terms of the grid points,
    entry '[k + 1, l + 1]' is the value on '(t_k, t_l]'.

    This costs 'O(m^2)' and is meant for verification only.
    """

    m = system.grid.shape[0]
    gam, bet = system.dc, system.db

    tables = {}
    for name in ("psi0", "psi1", "psi2", "psi3", "h0", "h1", "g2", "g3"):
        tables[name] = numpy.full((m + 1, m + 1), numpy.nan)
        diag = 1.0 if name in ("psi0", "psi2") else 0.0
        numpy.fill_diagonal(tables[name], diag)

    psi0, psi1, psi2, psi3 = (tables[name] for name in ("psi0", "psi1", "psi2", "psi3"))
    h0, h1, g2, g3 = (tables[name] for name in ("h0", "h1", "g2", "g3"))

    for a in range(m - 1, -1, -1):
        cols = slice(a + 1, m + 1)

        h0[a, cols] = h0[a + 1, cols] + bet[a] * psi0[a + 1, cols]
        psi0[a, cols] = psi0[a + 1, cols] + gam[a] * h0[a, cols]

        h1[a, cols] = h1[a + 1, cols] + bet[a] * psi1[a + 1, cols]
        psi1[a, cols] = psi1[a + 1, cols] + gam[a] * (1 + h1[a, cols])

        psi2[a, cols] = psi2[a + 1, cols] + bet[a] * g2[a + 1, cols]
        g2[a, cols] = g2[a + 1, cols] + gam[a] * psi2[a, cols]

        psi3[a, cols] = psi3[a + 1, cols] + bet[a] * (1 + g3[a + 1, cols])
        g3[a, cols] = g3[a + 1, cols] + gam[a] * psi3[a, cols]

    return {"psi0": psi0, "psi1": psi1, "psi2": psi2, "psi3": psi3}

def psi_identity_errors(system, tables=None):
    """
    Verify the identities between the interval functions and return a dictionary of the largest
    relative errors, one per identity. With sums over the atoms 'k' of the range '[a, b)':
      * psi0_psi1 - 'Psi0[a, b] = 1 + sum Psi1[a, k+1] db_k'.
      * psi0_psi3 - 'Psi0[a, b] = 1 + sum dc_k Psi3[k, b]'.
      * psi1_psi0 - 'Psi1[a, b] = sum Psi0[a, k] dc_k'.
      * psi1_psi2 - 'Psi1[a, b] = sum dc_k Psi2[k, b]'.
      * psi2_psi1 - 'Psi2[a, b] = 1 + sum db_k Psi1[k+1, b]'.
      * psi2_psi3 - 'Psi2[a, b] = 1 + sum Psi3[a, k] dc_k'.
      * psi3_psi2 - 'Psi3[a, b] = sum Psi2[a, k+1] db_k'.
      * psi3_psi0 - 'Psi3[a, b] = sum db_k Psi0[k+1, b]'.
      * determinant - 'Psi0 Psi2 - Psi1 Psi3 = 1'.
      * resolvent - the recursions against the tables at the grid end-points.
    The 'tables' argument is the result of 'psi_tables()', computed if 'None'.
    """

    if tables is None:
        tables = psi_tables(system)

    psi0, psi1, psi2, psi3 = (tables[name] for name in ("psi0", "psi1", "psi2", "psi3"))
    gam, bet = system.dc, system.db
    m = gam.shape[0]

    rhs = {name: numpy.full((m + 1, m + 1), numpy.nan) for name in
           ("psi0_psi1", "psi0_psi3", "psi1_psi0", "psi1_psi2", "psi2_psi1", "psi2_psi3",
            "psi3_psi2", "psi3_psi0")}

    # The forms summing over the right end of the range.
    def head_sums(start, terms):
        """Return 'start' followed by 'start' plus the running sums of 'terms'."""
        return numpy.concatenate(([start], start + numpy.cumsum(terms)))

    for a in range(m + 1):
        rhs["psi0_psi1"][a, a:] = head_sums(1.0, psi1[a, a + 1:] * bet[a:])
        rhs["psi1_psi0"][a, a:] = head_sums(0.0, psi0[a, a:m] * gam[a:])
        rhs["psi2_psi3"][a, a:] = head_sums(1.0, psi3[a, a:m] * gam[a:])
        rhs["psi3_psi2"][a, a:] = head_sums(0.0, psi2[a, a + 1:] * bet[a:])

    # The forms summing over the left end of the range.
    def tail_sums(terms):
        """Return the sums of 'terms[k]' over 'k >= a' for every 'a', and 0 for 'a = len'."""
        return numpy.concatenate((numpy.cumsum(terms[::-1])[::-1], [0.0]))

    for b in range(m + 1):
        rhs["psi0_psi3"][:b + 1, b] = 1 + tail_sums(gam[:b] * psi3[:b, b])
        rhs["psi1_psi2"][:b + 1, b] = tail_sums(gam[:b] * psi2[:b, b])
        rhs["psi2_psi1"][:b + 1, b] = 1 + tail_sums(bet[:b] * psi1[1:b + 1, b])
        rhs["psi3_psi0"][:b + 1, b] = tail_sums(bet[:b] * psi0[1:b + 1, b])

    lhs = {"psi0_psi1": psi0, "psi0_psi3": psi0, "psi1_psi0": psi1, "psi1_psi2": psi1,
           "psi2_psi1": psi2, "psi2_psi3": psi2, "psi3_psi2": psi3, "psi3_psi0": psi3}

    def relerr(left, right):
        """Return the largest relative difference over the upper triangle."""

        valid = numpy.isfinite(left)
        diff = numpy.abs(left[valid] - right[valid]) / numpy.maximum(1.0, numpy.abs(left[valid]))
        return float(numpy.max(diff)) if diff.size else 0.0

    errors = {name: relerr(lhs[name], rhs[name]) for name in rhs}
    errors["determinant"] = relerr(psi0 * psi2, 1 + psi1 * psi3)

    recursions = numpy.concatenate((system.psi1_from0 - psi1[0, 1:],
                                    system.psi0_to_end - psi0[1:, m],
                                    [system.psi0_total - psi0[0, m]]))
    scale = max(1.0, abs(system.psi0_total))
    errors["resolvent"] = float(numpy.max(numpy.abs(recursions))) / scale
    return errors

def kernel_l2_surrogate(system):
    """
    Return 'sum_{i,j} K(t_i, t_j)^2 dB_i dB_j', the finite-grid surrogate of the square
    integrability of the kernel with respect to 'B x B'. Computed in 'O(m)'.
    """

    # 'K^2 dB dB' equals 'c(t_i ^ t_j)^2 db_i db_j' in the transformed scale.
    csq_db = system.c**2 * system.db
    above = numpy.cumsum(system.db[::-1])[::-1] - system.db
    return float(2 * numpy.sum(csq_db * above) + numpy.sum(csq_db * system.db))

class PhiSolution:
    """
    The Fredholm equation solution. The public attributes are as follows.
      * phi - the solution 'phi' at the grid points, shape '(m, p)'.
      * d_f - the Volterra solution 'D[f]', shape '(m, p)'.
      * rho_tilde - 'P(0, t) rho[f, -D[f]](t)', shape '(m, p)'.
      * residual - the sup-norm residual of the equation, relative to 'max(1, |phi|, |D[f]|)'.
      * route - "recursion" or "dense", the route that produced the solution.
    """

    def __init__(self, grid, phi, d_f, rho_tilde, residual, route):
        """The class constructor. The arguments are the attributes described in the docstring."""

        self.grid = grid
        self.phi = phi
        self.d_f = d_f
        self.rho_tilde = rho_tilde
        self.residual = residual
        self.route = route

def _apply_kernel(system, vals):
    """
    Return 'sum_j K(t_i, t_j) vals_j' in the original scale, 'K = P(0, t_i) P(0, t_j) c(t_i ^ t_j)'.
    """

    shape = (-1,) + (1,) * (vals.ndim - 1)
    p0 = numpy.exp(system.logP0).reshape(shape)
    c = system.c.reshape(shape)
    weighted = p0 * vals

    lower = numpy.cumsum(c * weighted, axis=0)
    upper = numpy.cumsum(weighted[::-1], axis=0)[::-1]
    upper = numpy.concatenate((upper[1:], numpy.zeros_like(upper[:1])))
    return p0 * (lower + c * upper)

def equation_residual(system, funcs, phi, d_f):
    """
    Substitute 'phi' into the untransformed Fredholm equation and return the sup-norm residual of
    'phi + D[f] + int K phi dB - int K cov[f, ell_prime] dN', relative to
    'max(1, sup |phi|, sup |D[f]|)'.
    """

    dbv = funcs.dB[:, None]
    dnv = funcs.dN[:, None]
    res = phi + d_f + _apply_kernel(system, phi * dbv) - _apply_kernel(system, funcs.cov_f_lp * dnv)
    scale = max(1.0, float(numpy.max(numpy.abs(phi))), float(numpy.max(numpy.abs(d_f))))
    return float(numpy.max(numpy.abs(res))) / scale

def solve_phi(system, funcs, d_f, tol=RESIDUAL_TOL):
    """
    Solve the Fredholm equation for the efficient score weight 'phi' and return a 'PhiSolution'
    object. The arguments are as follows.
      * system - the 'FredholmSystem' built from 'funcs'.
      * funcs - the 'Functionals' object.
      * d_f - the Volterra solution 'D[f]', a step function or an array of shape '(m, p)'.
      * tol - the residual tolerance. If the recursion route misses it, the dense solver is tried,
              and if that misses it too, 'ErrorNotConverged' is raised.
    """

    d_vals = d_f.values if isinstance(d_f, StepFunction) else numpy.asarray(d_f, dtype=float)
    if d_vals.ndim == 1:
        d_vals = d_vals[:, None]

    p0 = numpy.exp(system.logP0)[:, None]
    rho = funcs.cov_f_lp + funcs.var_lp[:, None] * d_vals
    rhs = p0 * rho * funcs.dN[:, None]

    psi = system.apply_resolvent(rhs)
    phi = -d_vals + p0 * psi
    residual = equation_residual(system, funcs, phi, d_vals)
    route = "recursion"

    if not residual <= tol and system.grid.shape[0] <= DENSE_MAX:
        _LOG.warning("Fredholm residual %.3g exceeds %.3g, retrying with the dense solver",
                     residual, tol)
        kc = system.kernel()
        psi = solve_dense_oracle(system, kc @ rhs)
        phi = -d_vals + p0 * psi
        residual = equation_residual(system, funcs, phi, d_vals)
        route = "dense"

    if not residual <= tol:
        raise ErrorNotConverged(f"the Fredholm equation residual {residual:.3g} exceeds the "
                                f"tolerance {tol:.3g}",
                                diagnostics={"stage": "solve_phi", "residual": residual,
                                             "kappa": system.kappa})

    _LOG.debug("Fredholm solution: route %s, residual %.3g", route, residual)
    return PhiSolution(funcs.grid, phi, d_vals, p0 * rho, residual, route)
