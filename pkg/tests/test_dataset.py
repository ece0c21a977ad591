#!/usr/bin/python3
#
# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""Test module for the censored sample and the dataset reader and writer."""

import numpy
import pandas
import pytest
from pepclibs.helperlibs import YAML
from transfitlibs import CensoredSample, Simulate
from transfitlibs.datasetlibs import RODataset, WODataset, _CSV
from transfitlibs.helperlibs.Exceptions import (Error, ErrorBadData, ErrorBadTime, ErrorEmptyInput,
                                                ErrorExists, ErrorNoFailures)

def test_sorting_and_grid():
    """Test the record order and the event grid, including ties."""

    sample = CensoredSample.CensoredSample([3.0, 1.0, 2.0, 2.0, 2.0, 5.0], [1, 1, 0, 1, 1, 0],
                                           [[0.1], [0.2], [0.3], [0.4], [0.5], [0.6]])

    assert sample.n == 6
    assert sample.x.tolist() == [1.0, 2.0, 2.0, 2.0, 3.0, 5.0]
    # Failures go before censorings at ties.
    assert sample.delta.tolist() == [1, 1, 1, 0, 1, 0]
    assert sample.z[sample.delta == 0][:, 0].tolist() == [0.3, 0.6]
    assert sample.order[0] == 1

    assert sample.event_times.tolist() == [1.0, 2.0, 3.0]
    assert sample.event_deaths.tolist() == [1, 2, 1]
    assert numpy.allclose(sample.event_counts, [1 / 6, 2 / 6, 1 / 6])
    assert numpy.allclose(sample.at_risk, [1.0, 5 / 6, 2 / 6])
    assert sample.risk_start.tolist() == [0, 1, 4]
    assert sample.event_index.tolist() == [0, 1, 1, -1, 2, -1]
    assert sample.last_event.tolist() == [0, 1, 1, 1, 2, 2]
    assert sample.tau0 == 5.0

def test_bad_records():
    """Test that bad records are rejected with the distinct error types."""

    with pytest.raises(ErrorEmptyInput):
        CensoredSample.CensoredSample([], [])
    with pytest.raises(ErrorNoFailures):
        CensoredSample.CensoredSample([1.0, 2.0], [0, 0])
    with pytest.raises(ErrorBadTime):
        CensoredSample.CensoredSample([1.0, -2.0], [1, 0])
    with pytest.raises(ErrorBadTime):
        CensoredSample.CensoredSample([1.0, numpy.nan], [1, 0])
    with pytest.raises(ErrorBadTime):
        CensoredSample.CensoredSample([1.0, numpy.inf], [1, 0])
    with pytest.raises(ErrorBadData):
        CensoredSample.CensoredSample([1.0, 2.0], [1, 2])
    with pytest.raises(ErrorBadData):
        CensoredSample.CensoredSample([1.0, 2.0], [1, 0], [[0.0]])
    with pytest.raises(ErrorEmptyInput):
        CensoredSample.from_records([])
    with pytest.raises(ErrorBadData):
        CensoredSample.from_records([(1.0, 1, 0.5), (2.0, 0)])

def test_from_records():
    """Test creating samples from tuples."""

    sample = CensoredSample.from_records([(2.0, 1, 0.5, 1.0), (1.0, 0, -0.5, 0.0)])
    assert sample.dim_z == 2
    assert sample.x.tolist() == [1.0, 2.0]
    assert sample.z.tolist() == [[-0.5, 0.0], [0.5, 1.0]]

    # A headerless frame has integer column labels.
    frame = pandas.DataFrame({"x": [1.0, 2.0], "delta": [1, 0], 0: [0.5, 0.1]})
    with pytest.raises(ErrorBadData):
        CensoredSample.from_records(frame)
    with pytest.raises(ErrorBadData):
        CensoredSample.from_records(pandas.DataFrame([[1.0, 1], [2.0, 0]]))

def test_simulated_round_trip():
    """Test that a sample built from simulated records keeps the failure count and the times."""

    cfg = {"model": {"family": "odds_ratio", "eta": 1, "dim_theta": 2}, "theta0": [0.5, -0.5],
           "censoring": {"type": "koziol_green", "a": 0.5}, "n": 400, "seed": 9}
    frame = Simulate.simulate_sample(Simulate.SimConfig.from_dict(cfg))
    sample = CensoredSample.from_records(frame)

    assert sample.n == 400
    assert sample.dim_z == 2
    assert int(numpy.sum(sample.delta)) == int(frame["delta"].sum())
    assert sample.tau0 == frame["x"].max()
    assert numpy.array_equal(numpy.sort(sample.x), numpy.sort(frame["x"].to_numpy()))
    assert numpy.array_equal(sample.z, frame[["z1", "z2"]].to_numpy()[sample.order])

def _write(path, text):
    """Write 'text' to file 'path'."""

    with open(path, "w", encoding="utf-8") as fobj:
        fobj.write(text)

def test_csv_input(tmp_path):
    """Test reading bare CSV files."""

    path = tmp_path / "records.csv"
    _write(path, "x,delta,z2,z1\n1.5,1,0.2,0.1\n0.5,0,0.4,0.3\n2.5,1,0.6,0.5\n")
    sample = RODataset.RODataset(path).to_sample()
    assert sample.x.tolist() == [0.5, 1.5, 2.5]
    # Covariate columns are ordered by their number.
    assert sample.z[0].tolist() == [0.3, 0.4]

    bad = {"empty.csv": ("", ErrorEmptyInput),
           "header.csv": ("x,delta\n", ErrorEmptyInput),
           "text.csv": ("x,delta\n1.0,yes\n2.0,1\n", ErrorBadData),
           "missing.csv": ("x,delta,z1\n1.0,1,\n2.0,1,0.5\n", ErrorBadTime),
           "column.csv": ("x,delta,w\n1.0,1,0\n2.0,1,0\n", ErrorBadData),
           "nofail.csv": ("x,delta\n1.0,0\n2.0,0\n", ErrorNoFailures),
           "negative.csv": ("x,delta\n-1.0,1\n2.0,1\n", ErrorBadTime)}

    for name, (text, exc) in bad.items():
        path = tmp_path / name
        _write(path, text)
        with pytest.raises(exc):
            RODataset.RODataset(path).to_sample()

    with pytest.raises(Error):
        RODataset.RODataset(tmp_path / "does-not-exist")

def test_dataset_directory(tmp_path):
    """Test writing a dataset and reading it back."""

    cfg = {"model": {"family": "odds_ratio", "eta": 1, "dim_theta": 1}, "theta0": [1.0],
           "n": 300, "seed": 5}
    config = Simulate.SimConfig.from_dict(cfg)
    frame = Simulate.simulate_sample(config)

    outdir = tmp_path / "dataset"
    with WODataset.WODataset("transfit", "1.0.0", outdir) as dataset:
        dataset.info["seed"] = config.seed
        dataset.write_sample(frame)
        dataset.write_info()

    info = YAML.load(outdir / "info.yml")
    assert info["records"] == 300
    assert info["seed"] == 5
    assert info["format_version"] == "1.0"

    loaded = RODataset.RODataset(outdir)
    assert loaded.info["toolname"] == "transfit"
    # Numbers are written with 17 significant digits, so they are read back exactly.
    assert numpy.array_equal(loaded.load_df()["x"].to_numpy(), frame["x"].to_numpy())
    assert numpy.array_equal(loaded.load_df()["z1"].to_numpy(), frame["z1"].to_numpy())

    with pytest.raises(ErrorExists):
        WODataset.WODataset("transfit", "1.0.0", outdir)

def test_empty_dataset_removed(tmp_path):
    """Test that a dataset without records is removed on close."""

    outdir = tmp_path / "dataset"
    with WODataset.WODataset("transfit", "1.0.0", outdir):
        pass
    assert not outdir.exists()

def test_write_columns(tmp_path):
    """Test the CSV column writer."""

    path = tmp_path / "curves.csv"
    _CSV.write_columns(path, {"t": [0.5, 1.0], "value": [0.1, 2]})
    assert path.read_text(encoding="utf-8").splitlines()[0] == "t,value"
    assert len(path.read_text(encoding="utf-8").splitlines()) == 3

    with pytest.raises(ErrorExists):
        _CSV.write_columns(path, {"t": [0.5]})
    with pytest.raises(Error):
        _CSV.write_columns(tmp_path / "bad.csv", {"t": [0.5, 1.0], "value": [0.1]})
    with pytest.raises(Error):
        _CSV.write_columns(tmp_path / "empty.csv", {})
