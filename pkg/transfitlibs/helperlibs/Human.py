# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module contains misc. helper functions with the common theme of representing something in a
human-readable format, or turning numerical results into plain data for the YAML and CSV output.
"""

# pylint: disable=wildcard-import,unused-wildcard-import
from pepclibs.helperlibs.Human import *

import math
import numpy

def num2str(val):
    """Format number 'val' with 17 significant digits, so that it round-trips exactly."""

    if isinstance(val, (bool, numpy.bool_)):
        return str(int(val))
    if isinstance(val, (int, numpy.integer)):
        return str(int(val))
    return f"{float(val):.17g}"

def to_plain(obj):
    """
    Convert 'obj' to plain python types suitable for 'YAML.dump()': numpy arrays become (nested)
    lists, numpy scalars become python numbers, dictionaries and sequences are converted
    recursively. Infinite and NaN floats become the "inf", "-inf" and "nan" strings.
    """

    if isinstance(obj, dict):
        return {str(key): to_plain(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(val) for val in obj]
    if isinstance(obj, numpy.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, numpy.bool_)):
        return bool(obj)
    if isinstance(obj, (int, numpy.integer)):
        return int(obj)
    if isinstance(obj, (float, numpy.floating)):
        val = float(obj)
        if math.isnan(val) or math.isinf(val):
            return str(val)
        return val
    return obj

def estimates2str(theta, se, cis, level):
    """
    Format parameter estimates for the log. The arguments are as follows.
      * theta - the estimates.
      * se - the standard errors.
      * cis - the confidence intervals, an array of shape '(d, 2)'.
      * level - the confidence level.
    """

    lines = []
    pct = f"{level * 100:g}%"
    for idx, (val, err, (low, high)) in enumerate(zip(theta, se, cis)):
        lines.append(f"theta[{idx + 1}] = {val:.6g} (se {err:.4g}, {pct} CI [{low:.6g}, "
                     f"{high:.6g}])")
    return "\n".join(lines)
