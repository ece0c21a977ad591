# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module includes the "simulate" 'transfit' command implementation.
"""

import logging
from transfitlibs import Simulate
from transfitlibs.datasetlibs import WODataset
from transfittools import _Common

_LOG = logging.getLogger()

def simulate_command(args):
    """Implements the 'simulate' command."""

    cfg = _Common.load_config(args.config)
    config = _Common.get_sim_config(args, cfg)

    frame = Simulate.simulate_sample(config)

    with WODataset.WODataset(args.toolname, args.toolver, args.outdir) as dataset:
        dataset.info["rng"] = Simulate.RNG_NAME
        dataset.info["seed"] = config.seed
        dataset.info["tau0"] = float(frame["x"].max())
        dataset.info["theta0"] = config.theta0.tolist()
        dataset.info["gamma0"] = config.gamma0.to_spec()
        dataset.info["config"] = config.to_dict()

        dataset.write_sample(frame)
        dataset.write_info()

        _LOG.info("Wrote %d records (%d failures) to '%s'", dataset.info["records"],
                  dataset.info["failures"], args.outdir)
