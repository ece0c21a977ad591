# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the right-continuous step function class used for everything that lives on the
event grid: the transformation 'Gamma', the 'C' and 'B' measures, the Volterra solution 'D[f]', the
Fredholm solution 'phi', and so on. It also provides 'integrate()', which reduces the integrals
against step measures to finite sums over the grid.
"""

import numpy
from transfitlibs.helperlibs.Exceptions import Error

class StepFunction:
    """
    A right-continuous step function with jumps on a grid. The value is 'value_at_0' before the
    first grid point and 'values[k]' on '[grid[k], grid[k+1])'. Values may be vectors or matrices,
    in which case the first axis of 'values' is the grid axis.
    """

    def __call__(self, t):
        """Evaluate the step function at 't' (a number or an array)."""

        t = numpy.asarray(t, dtype=float)
        idx = numpy.searchsorted(self.grid, t, side="right") - 1
        vals = self.values[numpy.maximum(idx, 0)]
        before = idx < 0
        if numpy.any(before):
            vals = numpy.array(vals, dtype=float)
            vals[before] = self.value_at_0
        return vals

    def left_limits(self):
        """Return the left limits at the grid points (the value at the previous grid point)."""

        first = numpy.broadcast_to(self.value_at_0, self.values.shape[1:])
        return numpy.concatenate(([first], self.values[:-1]))

    def jumps(self):
        """Return the jumps at the grid points."""
        return self.values - self.left_limits()

    def same_grid(self, other):
        """Return 'True' if step function 'other' lives on the same grid."""

        if self.grid is other.grid:
            return True
        return self.grid.shape == other.grid.shape and numpy.array_equal(self.grid, other.grid)

    def __init__(self, grid, values, value_at_0=0.0, monotone=False):
        """
        The class constructor. The arguments are as follows.
          * grid - strictly increasing grid points.
          * values - the values at the grid points, the first axis is the grid axis.
          * value_at_0 - the value before the first grid point.
          * monotone - if 'True', the values must be non-decreasing.
        """

        self.grid = numpy.asarray(grid, dtype=float)
        self.values = numpy.asarray(values, dtype=float)
        self.value_at_0 = value_at_0
        self.monotone = monotone

        if self.grid.ndim != 1:
            raise Error("the step function grid must be 1-dimensional")
        if self.values.shape[:1] != self.grid.shape:
            raise Error(f"step function has {self.values.shape[0]} values for "
                        f"{self.grid.shape[0]} grid points")
        if self.grid.shape[0] > 1 and numpy.any(numpy.diff(self.grid) <= 0):
            raise Error("the step function grid is not strictly increasing")
        if monotone and self.values.size:
            diffs = self.jumps()
            scale = max(1.0, float(numpy.max(numpy.abs(self.values))))
            if numpy.min(diffs) < -1e-12 * scale:
                raise Error(f"step function is flagged monotone, but decreases by "
                            f"{-float(numpy.min(diffs))}")

def integrate(measure, integrand, lo, hi, closed="right"):
    """
    Integrate step function 'integrand' against the jumps of step function 'measure' over a window.
    The arguments are as follows.
      * measure - the cumulative step function whose jumps define the measure.
      * integrand - the step function to integrate, must share the grid with 'measure'.
      * lo, hi - the window end-points.
      * closed - "right" for the '(lo, hi]' window, "left" for the '[lo, hi)' window.

    Return the sum of 'integrand(t_k) * jump(t_k)' over the grid points 't_k' inside the window.
    """

    if not measure.same_grid(integrand):
        raise Error("cannot integrate step functions living on different grids")

    grid = measure.grid
    if closed == "right":
        inside = (grid > lo) & (grid <= hi)
    elif closed == "left":
        inside = (grid >= lo) & (grid < hi)
    else:
        raise Error(f"bad window type '{closed}', use one of: left, right")

    jumps = measure.jumps()[inside]
    vals = integrand.values[inside]
    if vals.ndim > jumps.ndim:
        jumps = jumps.reshape(jumps.shape + (1,) * (vals.ndim - jumps.ndim))
    return numpy.sum(vals * jumps, axis=0)
