#!/usr/bin/python3
#
# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
Test module for 'transfit' project. Tests following commands with good input data:
- simulate
- fit
- onestep
- bound
- diagnose
"""

# pylint: disable=redefined-outer-name
# pylint: disable=unused-import

import sys
import pandas
from pepclibs.helperlibs import YAML
from common import tool
from transfittools.transfit import _Transfit

def _inputs(path, data=True):
    """Return the '--config' and '--data' options for test data directory 'path'."""

    args = f"--config {path / 'config.yml'}"
    if data and (path / "sample.csv").exists():
        args += f" --data {path / 'sample.csv'}"
    return args

def _good_path(tool, name):
    """Return the good test data directory called 'name'."""
    return next(path for path in tool.good_paths if path.name == name)

def _files(outdir):
    """Return a dictionary of the contents of all files in 'outdir'."""
    return {path.name: path.read_bytes() for path in sorted(outdir.iterdir()) if path.is_file()}

def test_good_input_data(tool):
    """Test 'fit', 'onestep', 'bound', and 'diagnose' commands for good input data."""

    for path in tool.good_paths:
        for data in (False, True):
            if data and not (path / "sample.csv").exists():
                continue
            args = _inputs(path, data=data)
            outdir = tool.command("fit", args)
            result = YAML.load(outdir / "result.yml")
            assert result["converged"]
            assert (outdir / "gamma.csv").exists()

            theta = ",".join(str(val) for val in result["theta_hat"])
            tool.command("onestep", f"{args} --theta {theta}")
            tool.command("bound", args)
            tool.command("diagnose", args)

def test_simulate(tool):
    """Test that the 'simulate' command output can be fitted."""

    for path in tool.good_paths:
        outdir = tool.command("simulate", f"--config {path / 'config.yml'} --seed 11")
        info = YAML.load(outdir / "info.yml")
        assert info["seed"] == 11
        assert info["records"] == YAML.load(path / "config.yml")["n"]

        tool.command("fit", f"--config {path / 'config.yml'} --data {outdir}")

def test_diagnose_replicates(tool):
    """Test the Monte-Carlo orthogonality report with parallel replicates."""

    path = _good_path(tool, "odds_ratio")
    outdir = tool.command("diagnose", f"--config {path / 'config.yml'} --reps 2 --jobs 2")
    orthogonality = YAML.load(outdir / "diagnose.yml")["orthogonality"]
    assert orthogonality["replicates"] + orthogonality["failed"] == 2
    assert orthogonality["replicates"] >= 1

def test_bound_curves(tool):
    """Test the 'bound' command curves file."""

    path = _good_path(tool, "odds_ratio")
    outdir = tool.command("bound", _inputs(path))
    curves = pandas.read_csv(outdir / "bound.csv")
    assert list(curves.columns) == ["t", "gamma", "C", "B", "c", "b", "kappa", "psi1_from0",
                                    "psi0_to_end", "resolvent_diag"]
    assert (curves["resolvent_diag"] > 0).all()
    assert curves["kappa"].is_monotonic_increasing

def test_determinism(tool):
    """Test that every command reproduces its output files byte by byte."""

    path = tool.good_paths[0]
    args = _inputs(path, data=False)
    for cmd in ("simulate", "fit", "bound", "diagnose"):
        cmdargs = f"--config {path / 'config.yml'}" if cmd == "simulate" else args
        first = tool.command(cmd, cmdargs)
        second = tool.command(cmd, cmdargs)
        assert _files(first) == _files(second), f"'{cmd}' output is not reproducible"

def test_exit_codes(tool, monkeypatch, tmp_path):
    """Test the exit codes of the 'transfit' script entry point."""

    path = tool.good_paths[0]

    argv = ["transfit", "fit", "--config", str(path / "config.yml"), "-o", str(tmp_path / "ok")]
    monkeypatch.setattr(sys, "argv", argv)
    assert _Transfit.main() == 0

    outdir = tmp_path / "noconv"
    argv = ["transfit", "fit", "--config", str(path / "config.yml"), "--tol", "1e-300",
            "--max-iter", "1", "-o", str(outdir)]
    monkeypatch.setattr(sys, "argv", argv)
    assert _Transfit.main() == 3
    result = YAML.load(outdir / "result.yml")
    assert not result["converged"]
    assert result["diagnostics"]["stage"] == "z_estimate"

    cfg = tmp_path / "bad.yml"
    cfg.write_text("model:\n  family: weibull\n  dim_theta: 1\n", encoding="utf-8")
    argv = ["transfit", "fit", "--config", str(cfg), "-o", str(tmp_path / "bad")]
    monkeypatch.setattr(sys, "argv", argv)
    assert _Transfit.main() == 2

    # Identical covariate columns make the 'V' matrix singular.
    records = pandas.read_csv(_good_path(tool, "ph") / "sample.csv")
    records["z2"] = records["z1"]
    data = tmp_path / "twin.csv"
    records.to_csv(data, index=False)
    cfg = tmp_path / "twin.yml"
    cfg.write_text("model:\n  family: odds_ratio\n  eta: 0\n  dim_theta: 2\n", encoding="utf-8")

    outdir = tmp_path / "singular"
    argv = ["transfit", "fit", "--config", str(cfg), "--data", str(data), "-o", str(outdir)]
    monkeypatch.setattr(sys, "argv", argv)
    assert _Transfit.main() == 2
    result = YAML.load(outdir / "result.yml")
    assert not result["converged"]
    assert result["diagnostics"]["stage"] == "z_estimate"
