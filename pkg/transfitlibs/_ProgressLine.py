# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module implements the Monte-Carlo progress line.
"""

import time
import logging

_LOG = logging.getLogger()

class ReplicatesProgressLine:
    """
    The progress line of a Monte-Carlo experiment: completed and failed replicates and the
    estimated remaining time, re-printed in place over a single terminal line.
    """

    def start(self):
        """Start tracking the progress."""
        self._start_ts = self._last_ts = time.time()

    def get_duration(self):
        """Return the experiment duration so far in seconds."""
        return time.time() - self._start_ts

    def _format(self, now):
        """Return the progress line text."""

        elapsed = max(now - self._start_ts, 1e-9)
        text = f"{self.label}: {self.done}/{self.total} replicates"
        if self.failed:
            text += f" ({self.failed} failed)"
        if 0 < self.done < self.total:
            text += f", about {(self.total - self.done) * elapsed / self.done:.0f}s left"
        else:
            text += f", {elapsed:.1f}s"
        return text

    def update(self, done, failed=0, final=False):
        """
        Update the progress. The arguments are as follows.
          * done - how many replicates were completed so far.
          * failed - how many of them failed to converge.
          * final - if 'True', this is the last progress update.
        """

        self.done = done
        self.failed = failed
        if not self.enabled:
            return

        now = time.time()
        if final:
            # Nothing to terminate if the line was never printed.
            if self._printed:
                print(f"\r{self._format(now)}", flush=True)
            _LOG.force_tty_newline_prefix = False
            self._printed = False
            return

        if now - self._last_ts < self.period:
            return

        # Log messages printed while the line is on the screen have to start on a new line.
        _LOG.force_tty_newline_prefix = True
        self._last_ts = now
        print(f"\r{self._format(now)}", end="", flush=True)
        self._printed = True

    def __init__(self, total, label="Replicates", period=1):
        """
        The class constructor. The arguments are as follows.
          * total - the total count of replicates.
          * label - the experiment name printed at the start of the line.
          * period - the minimum time between two updates of the line, seconds.
        """

        self.total = total
        self.label = label
        self.period = period
        self.done = 0
        self.failed = 0

        self._start_ts = None
        self._last_ts = None
        self._printed = False

        # Only a colored logger writes to a terminal.
        self.enabled = bool(getattr(_LOG, "colored", False)) and \
                       _LOG.getEffectiveLevel() <= logging.INFO
