# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
transfit - a tool for fitting semiparametric transformation models to right-censored data.
"""

import sys
import logging
from pathlib import Path

try:
    import argcomplete
except ImportError:
    # We can live without argcomplete, we only lose tab completions.
    argcomplete = None

from pepclibs.helperlibs import Logging, ArgParse
from transfitlibs.helperlibs.Exceptions import Error, ErrorNotConverged
from transfittools import _Common
from transfittools.transfit import ToolInfo

VERSION = ToolInfo.VERSION
TOOLNAME = ToolInfo.TOOLNAME

# The exit codes.
EXIT_ERROR = 2
EXIT_NOT_CONVERGED = 3

_LOG = logging.getLogger()
Logging.setup_logger(prefix=TOOLNAME)

def _add_outdir_option(subpars):
    """Add the '-o' option to 'subpars'."""

    arg = subpars.add_argument("-o", "--out", "--outdir", dest="outdir", type=Path, required=True,
                               help=_Common.OUTDIR_DESCR)
    if argcomplete:
        # pylint: disable=pepc-unused-variable
        arg.completer = argcomplete.completers.DirectoriesCompleter()

def _add_input_options(subpars):
    """Add the options selecting the configuration and the input records to 'subpars'."""

    subpars.add_argument("--config", type=Path, required=True, help=_Common.CONFIG_DESCR)
    subpars.add_argument("--data", type=Path, help=_Common.DATA_DESCR)
    subpars.add_argument("--seed", type=int, help=_Common.SEED_DESCR)

def _add_solver_options(subpars):
    """Add the solver options to 'subpars'."""

    subpars.add_argument("--tol", type=float, help=_Common.TOL_DESCR)
    subpars.add_argument("--max-iter", type=int, dest="max_iter", help=_Common.MAX_ITER_DESCR)

def _build_arguments_parser():
    """Build and return the arguments parser object."""

    text = f"{TOOLNAME} - a tool for fitting semiparametric transformation models to " \
           f"right-censored data."
    parser = ArgParse.ArgsParser(description=text, prog=TOOLNAME, ver=VERSION)

    subparsers = parser.add_subparsers(title="commands", dest="a command")
    subparsers.required = True # pylint: disable=pepc-unused-variable

    #
    # Create parsers for the "simulate" command.
    #
    text = "Simulate censored records."
    descr = """Simulate censored records from the model described in the configuration file and
               store them in a dataset directory."""
    subpars = subparsers.add_parser("simulate", help=text, description=descr)
    subpars.set_defaults(func=_simulate_command)

    subpars.add_argument("--config", type=Path, required=True, help=_Common.CONFIG_DESCR)
    subpars.add_argument("--seed", type=int, help=_Common.SEED_DESCR)
    _add_outdir_option(subpars)

    #
    # Create parsers for the "fit" command.
    #
    text = "Estimate the parameter."
    descr = """Estimate the parameter by solving the score equation, and estimate the
               transformation and the covariance."""
    subpars = subparsers.add_parser("fit", help=text, description=descr)
    subpars.set_defaults(func=_fit_command)

    _add_input_options(subpars)
    _add_outdir_option(subpars)
    _add_solver_options(subpars)

    #
    # Create parsers for the "onestep" command.
    #
    text = "Compute the one-step estimate."
    descr = """Improve a preliminary estimate by a single Newton step of the score equation."""
    subpars = subparsers.add_parser("onestep", help=text, description=descr)
    subpars.set_defaults(func=_onestep_command)

    _add_input_options(subpars)
    _add_outdir_option(subpars)
    _add_solver_options(subpars)
    subpars.add_argument("--theta", help=_Common.THETA_DESCR)

    #
    # Create parsers for the "bound" command.
    #
    text = "Compute the information bound."
    descr = """Approximate the population quantities of the score (the 'C' and 'B' measures, the
               'kappa' curve, the score covariance matrices) at the true parameter by plugging a
               large sample through the estimation pipeline, and report the information bound."""
    subpars = subparsers.add_parser("bound", help=text, description=descr)
    subpars.set_defaults(func=_bound_command)

    _add_input_options(subpars)
    _add_outdir_option(subpars)
    _add_solver_options(subpars)

    #
    # Create parsers for the "diagnose" command.
    #
    text = "Run the numerical diagnostics."
    descr = """Evaluate the score at the true parameter and report the numerical diagnostics: the
               Fredholm equation residual and the resolvent identities, the Volterra solution
               check, the transformation fixed-point residual and the nuisance orthogonality
               report."""
    subpars = subparsers.add_parser("diagnose", help=text, description=descr)
    subpars.set_defaults(func=_diagnose_command)

    _add_input_options(subpars)
    _add_outdir_option(subpars)
    _add_solver_options(subpars)
    subpars.add_argument("--reps", type=int, help=_Common.REPS_DESCR)
    subpars.add_argument("-j", "--jobs", type=int, default=1, help=_Common.JOBS_DESCR)

    if argcomplete:
        argcomplete.autocomplete(parser)

    return parser

def parse_arguments():
    """Parse input arguments."""

    parser = _build_arguments_parser()

    args = parser.parse_args()
    args.toolname = TOOLNAME
    args.toolver = VERSION

    return args

def _simulate_command(args):
    """Implements the 'transfit simulate' command."""

    from transfittools.transfit import _TransfitSimulate # pylint: disable=import-outside-toplevel

    _TransfitSimulate.simulate_command(args)

def _fit_command(args):
    """Implements the 'transfit fit' command."""

    from transfittools.transfit import _TransfitFit # pylint: disable=import-outside-toplevel

    _TransfitFit.fit_command(args)

def _onestep_command(args):
    """Implements the 'transfit onestep' command."""

    from transfittools.transfit import _TransfitFit # pylint: disable=import-outside-toplevel

    _TransfitFit.onestep_command(args)

def _bound_command(args):
    """Implements the 'transfit bound' command."""

    from transfittools.transfit import _TransfitBound # pylint: disable=import-outside-toplevel

    _TransfitBound.bound_command(args)

def _diagnose_command(args):
    """Implements the 'transfit diagnose' command."""

    from transfittools.transfit import _TransfitDiagnose # pylint: disable=import-outside-toplevel

    _TransfitDiagnose.diagnose_command(args)

def main():
    """Script entry point."""

    try:
        args = parse_arguments()

        if not getattr(args, "func", None):
            _LOG.error("please, run '%s -h' for help", TOOLNAME)
            return -1

        args.func(args)
    except KeyboardInterrupt:
        _LOG.info("Interrupted, exiting")
        return -1
    except ErrorNotConverged as err:
        _LOG.error(err)
        return EXIT_NOT_CONVERGED
    except Error as err:
        _LOG.error(err)
        return EXIT_ERROR

    return 0

# The script entry point.
if __name__ == "__main__":
    sys.exit(main())
