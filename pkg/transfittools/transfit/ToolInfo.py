# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides constants for information about the 'transfit' tool, such as version
and tool name.
"""

VERSION = "1.0.0"
TOOLNAME = "transfit"
