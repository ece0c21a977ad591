# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module contains miscellaneous functions used by the 'transfit' tool commands. There is no a
single purpose this module serves, it is just a collection of shared code. Many functions in this
module require the 'args' object which represents the command-line arguments.
"""

import logging
from pathlib import Path
import numpy
from pepclibs.helperlibs import YAML
from transfitlibs import CensoredSample, CoreModel, Estimate, Simulate
from transfitlibs.datasetlibs import RODataset
from transfitlibs.helperlibs import Human
from transfitlibs.helperlibs.Exceptions import Error, ErrorBadConfig, ErrorExists

_LOG = logging.getLogger()

# The allowed top-level configuration file keys.
CONFIG_KEYS = ("model", "theta0", "gamma0", "covariates", "censoring", "n", "seed", "score",
               "theta_init", "solver", "diagnose")

# The sample size used by the 'bound' command when the configuration does not specify it.
BOUND_SAMPLE_SIZE = 100000

# The format of floating point numbers in the YAML output files.
FLOAT_FORMAT = "%.17g"

# Description for the '--config' option.
CONFIG_DESCR = """Path to the YAML (or JSON) configuration file with the model, the true parameter,
                  the simulation and the solver settings."""

# Description for the '--data' option.
DATA_DESCR = """Path to the records to use instead of simulating them. This can be a dataset
                directory created by the 'simulate' command or a CSV file with the 'x', 'delta',
                'z1', ... columns."""

# Description for the '--out' option.
OUTDIR_DESCR = """Path to the directory to store the output files at. The directory is created if it
                  does not exist, but it must not contain the files the command writes."""

# Description for the '--seed' option.
SEED_DESCR = """The 64-bit random seed, overrides the 'seed' configuration file value. The default
                is 0."""

# Description for the '--jobs' option.
JOBS_DESCR = """How many worker processes to use for the Monte-Carlo replicates, default is 1."""

# Description for the '--tol' option.
TOL_DESCR = """The score equation tolerance: the estimation stops when the score sup-norm is within
               this value. Overrides the 'solver.tol' configuration file value, default is 1e-8."""

# Description for the '--max-iter' option.
MAX_ITER_DESCR = """Maximum count of Newton iterations, overrides the 'solver.max_iter'
                    configuration file value, default is 50."""

# Description for the '--theta' option of the 'onestep' command.
THETA_DESCR = """The preliminary estimate, a comma-separated list of numbers. Overrides the
                 'theta_init' configuration file value."""

# Description for the '--reps' option of the 'diagnose' command.
REPS_DESCR = """Count of simulated samples to pool for the nuisance orthogonality report. The
                default is the 'diagnose.reps' configuration file value, or 0, which means that the
                report is built from a single sample."""

def load_config(path):
    """
    Load the configuration file at 'path', validate the top-level keys and return the
    configuration dictionary.
    """

    path = Path(path)
    try:
        cfg = YAML.load(path)
    except Error as err:
        raise ErrorBadConfig(f"failed to load configuration file '{path}':\n"
                             f"{err.indent(2)}") from None

    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ErrorBadConfig(f"bad configuration file '{path}': the top-level element must be a "
                             f"dictionary")

    unknown = set(cfg) - set(CONFIG_KEYS)
    if unknown:
        raise ErrorBadConfig(f"unknown key(s) in configuration file '{path}': "
                             f"{', '.join(sorted(str(key) for key in unknown))}\nSupported keys "
                             f"are: {', '.join(CONFIG_KEYS)}")

    for key in ("solver", "diagnose"):
        if cfg.get(key) is not None and not isinstance(cfg[key], dict):
            raise ErrorBadConfig(f"bad '{key}' section in configuration file '{path}': must be a "
                                 f"dictionary")

    _LOG.debug("loaded configuration file '%s'", path)
    return cfg

def get_model(cfg):
    """Return the core model object described by the 'model' section of configuration 'cfg'."""

    if "model" not in cfg:
        raise ErrorBadConfig("the configuration does not include the 'model' section")
    return CoreModel.from_spec(cfg["model"])

def parse_theta(value, model, name):
    """
    Parse and validate parameter vector 'value' (a list of numbers or a comma-separated string) and
    return it as a numpy array. The 'name' argument is used in error messages.
    """

    if isinstance(value, str):
        value = [val.strip() for val in value.split(",")]

    try:
        theta = numpy.array(value, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise ErrorBadConfig(f"bad {name} '{value}', should be a list of numbers") from None

    try:
        return model.check_theta(theta)
    except ErrorBadConfig:
        raise
    except Error as err:
        raise type(err)(f"bad {name}:\n{err.indent(2)}") from None

def get_seed(args, cfg):
    """Return the random seed: the '--seed' option value or the configuration file value."""

    if getattr(args, "seed", None) is not None:
        return args.seed
    return cfg.get("seed", 0)

def get_solver_opts(args, cfg):
    """
    Return the validated solver options dictionary: the configuration file 'solver' section with
    the '--tol' and '--max-iter' command-line overrides.
    """

    opts = dict(cfg.get("solver") or {})
    if getattr(args, "tol", None) is not None:
        opts["tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        opts["max_iter"] = args.max_iter
    return Estimate.solver_opts(opts)

def get_sim_config(args, cfg, n=None):
    """Return the 'SimConfig' object for configuration 'cfg' and the command-line arguments."""
    return Simulate.SimConfig.from_dict(cfg, seed=get_seed(args, cfg), n=n)

def load_sample(args, cfg, n=None):
    """
    Load the records from the '--data' path, or simulate them according to configuration 'cfg'.
    Return the '(sample, sim_config)' tuple, where 'sim_config' is 'None' for loaded records.
    """

    if getattr(args, "data", None):
        _LOG.info("Loading records from '%s'", args.data)
        return RODataset.RODataset(args.data).to_sample(), None

    if "theta0" not in cfg:
        raise ErrorBadConfig("no records to use: specify the '--data' option or include 'theta0' "
                             "in the configuration to simulate the records")

    config = get_sim_config(args, cfg, n=n)
    _LOG.info("Simulating %d records with seed %d", config.n, config.seed)
    frame = Simulate.simulate_sample(config)
    return CensoredSample.from_records(frame), config

def init_outdir(outdir, filenames):
    """
    Create output directory 'outdir' if it does not exist and make sure it does not contain any of
    the 'filenames' files. Return the output directory path.
    """

    outdir = Path(outdir)
    if outdir.exists() and not outdir.is_dir():
        raise ErrorExists(f"path '{outdir}' exists and it is not a directory")

    for name in filenames:
        path = outdir / name
        if path.exists():
            raise ErrorExists(f"cannot use path '{outdir}' as the output directory, it already "
                              f"contains '{name}'")

    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise Error(f"failed to create directory '{outdir}':\n{err}") from None

    return outdir

def dump_yaml(data, path):
    """Write dictionary 'data' to YAML file 'path', numbers with 17 significant digits."""

    YAML.dump(Human.to_plain(data), path, float_format=FLOAT_FORMAT)
    _LOG.info("Wrote '%s'", path)
