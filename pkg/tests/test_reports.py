"""Report serialization and SVG overlays."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from erfcurves import (
    ErfSumModel,
    ErfTerm,
    FitConfig,
    StepCurve,
    build_supply_curve,
    coefficient_stats,
    emit_report,
    fit_curve,
    generate_synthetic_corpus,
    layer_stats,
    render_curve_svg,
    render_report,
    run_batch,
)
from erfcurves.errors import InvalidArgumentError
from erfcurves.reports import FIT_COLUMNS, read_fit_report_csv

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def report():
    return run_batch(generate_synthetic_corpus(seed=5, hours=2), FitConfig(m_supply=6, m_demand=3))


def test_csv_structure(report, tmp_path):
    path = emit_report(report, "csv", tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(FIT_COLUMNS)
    assert lines[3] == ""
    assert lines[4] == "aggregate,value"
    records, aggregates = read_fit_report_csv(path)
    assert len(records) == 2
    assert float(aggregates["mean_abs_error"]) == report.mean_abs_error
    assert float(records[0]["P_appr"]) == report.records[0].P_appr
    assert aggregates["config.m_supply"] == "6"


def test_emit_twice_is_byte_identical(report, tmp_path):
    a = emit_report(report, "csv", tmp_path / "a.csv").read_bytes()
    b = emit_report(report, "csv", tmp_path / "b.csv").read_bytes()
    assert a == b


def test_timing_is_opt_in(report):
    assert "fit_seconds" not in render_report(report, "csv")
    assert "fit_seconds" in render_report(report, "csv", include_timing=True)


def test_json_round_trip(report):
    record = json.loads(render_report(report, "json"))
    assert record["aggregates"]["max_abs_error"] == report.max_abs_error
    assert [r["P"] for r in record["records"]] == [r.P for r in report.records]
    assert json.loads(json.dumps(record)) == record


def test_other_reports(report):
    corpus = generate_synthetic_corpus(seed=5, hours=3)
    text = render_report(layer_stats(corpus), "csv")
    assert text.splitlines()[0] == "dimension,key,mean_offers,mean_bids"
    assert json.loads(render_report(layer_stats(corpus), "json"))["by_hour"]["1"] == [324.0, 65.0]
    stats = coefficient_stats([ErfSumModel.from_arrays("supply", [1, 2], [0, 1], [1, 1])] * 2)
    assert render_report(stats, "csv").splitlines()[1].startswith("supply,1,1.0,1.0,1.0")
    assert json.loads(render_report(stats, "json"))["rows"][1]["a_mean"] == 2.0


def test_report_errors(report, tmp_path):
    with pytest.raises(InvalidArgumentError):
        render_report(report, "xml")
    with pytest.raises(InvalidArgumentError):
        render_report(object(), "csv")
    with pytest.raises(OSError):
        emit_report(report, "csv", tmp_path / "missing" / "r.csv")


def polylines(path):
    root = ET.parse(path).getroot()
    return {p.get("id"): p.get("points").split() for p in root.iter(f"{SVG}polyline")}


def test_svg_overlay(tmp_path):
    corpus = generate_synthetic_corpus(seed=5, hours=1)
    curve = build_supply_curve(corpus[0].offers)
    assert len(curve) == 324
    fitted = fit_curve(curve, 10, "plateau")
    path = render_curve_svg(curve, fitted.model, tmp_path / "s.svg")
    lines = polylines(path)
    assert set(lines) == {"step", "fitted"}
    assert len(lines["fitted"]) >= 500
    # both ends of every plateau: every breakpoint appears in the step path
    assert len(lines["step"]) == 2 * len(curve)
    text = path.read_text()
    assert "quantity (MW)" in text and "price (EUR)" in text


def test_svg_flat_model(tmp_path):
    curve = StepCurve.from_points("supply", [(10, 5), (20, 9)])
    flat = ErfSumModel("supply", (ErfTerm(0.0, 5.0, 1.0),), 5.0)
    lines = polylines(render_curve_svg(curve, flat, tmp_path / "f.svg"))
    ys = {pt.split(",")[1] for pt in lines["fitted"]}
    assert len(ys) == 1


def test_svg_errors(tmp_path):
    curve = StepCurve.from_points("supply", [(10, 5)])
    with pytest.raises(InvalidArgumentError):
        render_curve_svg(curve, ErfSumModel("demand", ()), tmp_path / "x.svg")
    with pytest.raises(OSError):
        render_curve_svg(curve, ErfSumModel("supply", ()), tmp_path / "no" / "x.svg")
