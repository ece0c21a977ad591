# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides the 'CensoredSample' class - an immutable set of right-censored records
'(x, delta, z)' together with the event grid and the risk-set aggregates that all the sample
functionals are built from.
"""

import logging
import numpy
import pandas
from transfitlibs.helperlibs.Exceptions import (ErrorBadData, ErrorBadTime, ErrorEmptyInput,
                                                ErrorNoFailures)

_LOG = logging.getLogger()

class CensoredSample:
    """
    Right-censored records sorted by 'x' ascending, with failures before censorings at ties. The
    public attributes are as follows.
      * n - number of records.
      * x, delta, z - the sorted withdrawal times, failure indicators and covariates ('z' has shape
                      '(n, dim_z)').
      * order - the original record index of every sorted record.
      * event_times - the distinct failure times 't_1 < ... < t_m'.
      * event_counts - 'dN(t_k)', the number of failures at 't_k' divided by 'n'.
      * at_risk - 'Y(t_k)', the number of records with 'x >= t_k' divided by 'n'.
      * risk_start - index of the first sorted record at risk at 't_k' (records 'risk_start[k:]'
                     are at risk).
      * event_index - grid index of the failure time of every record, '-1' for censored records.
      * last_event - index of the last grid point 't_k <= x_i' for every record ('-1' if none).
      * tau0 - the largest observed time.
    """

    def _build_grid(self):
        """Build the event grid and the risk-set aggregates."""

        failed = self.delta == 1
        self.event_times, deaths = numpy.unique(self.x[failed], return_counts=True)
        self.event_deaths = deaths
        self.event_counts = deaths / self.n
        self.risk_start = numpy.searchsorted(self.x, self.event_times, side="left")
        self.at_risk = (self.n - self.risk_start) / self.n

        self.event_index = numpy.full(self.n, -1)
        self.event_index[failed] = numpy.searchsorted(self.event_times, self.x[failed])
        self.last_event = numpy.searchsorted(self.event_times, self.x, side="right") - 1

    def __init__(self, x, delta, z=None):
        """
        The class constructor. The arguments are as follows.
          * x - withdrawal times, non-negative.
          * delta - failure indicators, 1 for a failure and 0 for a censoring.
          * z - covariates, an array of shape '(n, dim_z)', or 'None' for no covariates.
        """

        x = numpy.asarray(x, dtype=float).reshape(-1)
        delta = numpy.asarray(delta).reshape(-1)

        if x.shape[0] == 0:
            raise ErrorEmptyInput("no censored records")
        if x.shape[0] < 2:
            raise ErrorBadData(f"at least 2 censored records are required, got {x.shape[0]}")
        if delta.shape != x.shape:
            raise ErrorBadData(f"got {delta.shape[0]} failure indicators for {x.shape[0]} times")

        if numpy.any(~numpy.isfinite(x)):
            raise ErrorBadTime("withdrawal time is not a finite number")
        if numpy.any(x < 0):
            raise ErrorBadTime(f"negative withdrawal time {numpy.min(x)}")

        try:
            delta_int = delta.astype(float)
        except (TypeError, ValueError):
            raise ErrorBadData("failure indicators must be 0 or 1") from None
        if not numpy.all((delta_int == 0) | (delta_int == 1)):
            raise ErrorBadData("failure indicators must be 0 or 1")
        delta = delta_int.astype(int)

        if z is None:
            z = numpy.zeros((x.shape[0], 0))
        z = numpy.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        if z.ndim != 2 or z.shape[0] != x.shape[0]:
            raise ErrorBadData(f"bad covariates array shape {z.shape} for {x.shape[0]} records")
        if z.size and not numpy.all(numpy.isfinite(z)):
            raise ErrorBadData("covariate value is not a finite number")

        if not numpy.any(delta == 1):
            raise ErrorNoFailures("no failures among the censored records")

        # Sort by time, failures first at ties.
        order = numpy.lexsort((-delta, x))
        self.order = order
        self.x = x[order]
        self.delta = delta[order]
        self.z = z[order]
        self.n = x.shape[0]
        self.dim_z = z.shape[1]
        self.tau0 = float(self.x[-1])

        for arr in (self.x, self.delta, self.z):
            arr.flags.writeable = False

        self.event_times = None
        self.event_deaths = None
        self.event_counts = None
        self.risk_start = None
        self.at_risk = None
        self.event_index = None
        self.last_event = None
        self._build_grid()

        _LOG.debug("censored sample: %d records, %d failures, %d distinct failure times",
                   self.n, int(numpy.sum(self.delta)), self.event_times.shape[0])

def from_records(records):
    """
    Create and return a 'CensoredSample' object from 'records'. The 'records' argument can be a
    'pandas.DataFrame' with 'x', 'delta', 'z1', ... columns, or an iterable of '(x, delta, z1, ...)'
    tuples.
    """

    if isinstance(records, pandas.DataFrame):
        df = records
        for colname in ("x", "delta"):
            if colname not in df.columns:
                raise ErrorBadData(f"the records do not include the '{colname}' column")
        zcols = [col for col in df.columns if col not in ("x", "delta")]
        for col in zcols:
            if not (isinstance(col, str) and col.startswith("z") and col[1:].isdigit()):
                raise ErrorBadData(f"unexpected column '{col}', expected 'x', 'delta', 'z1', ...")
        zcols.sort(key=lambda col: int(col[1:]))
        if df.isnull().values.any():
            raise ErrorBadTime("the records include missing values")
        z = df[zcols].to_numpy(dtype=float) if zcols else None
        return CensoredSample(df["x"].to_numpy(dtype=float), df["delta"].to_numpy(), z)

    rows = [tuple(row) for row in records]
    if not rows:
        raise ErrorEmptyInput("no censored records")

    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise ErrorBadData("the records have inconsistent covariate dimension")
    width = widths.pop()
    if width < 2:
        raise ErrorBadData("a record must include at least the time and the failure indicator")

    try:
        arr = numpy.array(rows, dtype=float)
    except (TypeError, ValueError) as err:
        raise ErrorBadData(f"failed to convert the records to numbers:\n{err}") from None

    z = arr[:, 2:] if width > 2 else None
    return CensoredSample(arr[:, 0], arr[:, 1], z)
