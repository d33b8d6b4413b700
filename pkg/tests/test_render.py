import dataclasses
from xml.etree import ElementTree

import numpy as np
import pytest

from ftcbf.api.barriers import QuadraticRegion
from ftcbf.api.render import RunNotFoundError, RunStore, SvgPlotGenerator, summarize
from ftcbf.api.render import csv_writer
from ftcbf.api.render.svg_generator import fmt, region_ellipse
from ftcbf.api.sim import SimConfig, run, segment_progress


@pytest.fixture
def shuttle_run(shuttle, shuttle_model):
    return run(shuttle, SimConfig.from_scenario(shuttle_model))


@pytest.fixture
def saved_run(tmp_path, shuttle, shuttle_model, shuttle_run):
    out = tmp_path / "shuttle"
    RunStore().save_run(out, shuttle_model, shuttle, shuttle_run, summarize("shuttle", shuttle_run))
    return out


def test_fmt_normalizes_negative_zero():
    assert fmt(-0.0004) == "0.000"
    assert fmt(1.23456) == "1.235"


def test_region_ellipse_axes():
    center, rx, ry, _ = region_ellipse(QuadraticRegion(np.array([1.0, 1.0]), 16.0 * np.eye(2)))
    np.testing.assert_array_equal(center, [1.0, 1.0])
    assert (rx, ry) == pytest.approx((0.25, 0.25))
    _, rx, ry, _ = region_ellipse(QuadraticRegion(np.zeros(2), np.diag([4.0, 1.0])))
    assert (rx, ry) == pytest.approx((0.5, 1.0))


def test_region_ellipse_projects_higher_dimensions():
    center, rx, ry, _ = region_ellipse(QuadraticRegion(np.array([0.0, 1.0, 2.0]), np.diag([1.0, 4.0, 9.0])))
    np.testing.assert_array_equal(center, [0.0, 1.0])
    assert (rx, ry) == pytest.approx((0.5, 1.0))


def test_trajectory_svg(shuttle, shuttle_run):
    generator = SvgPlotGenerator()
    svg = generator.trajectory_svg(shuttle, shuttle_run)
    assert svg == generator.trajectory_svg(shuttle, shuttle_run)
    assert 'id="region-E"' in svg and 'id="region-W"' in svg
    assert svg.count('class="switch"') == 2
    assert "-0.000" not in svg


def test_svg_escapes_markup_in_names(shuttle, shuttle_run):
    regions = {'E<&"': shuttle.regions["E"], "W": shuttle.regions["W"]}
    odd = dataclasses.replace(shuttle, name="east & west <shuttle>", regions=regions)
    svg = SvgPlotGenerator().trajectory_svg(odd, shuttle_run)
    root = ElementTree.fromstring(svg.encode("utf-8"))
    namespace = "{http://www.w3.org/2000/svg}"
    assert root.find(f"{namespace}title").text == "east & west <shuttle>"
    ids = {e.get("id") for e in root.iter(f"{namespace}ellipse")}
    assert ids == {'region-E<&"', "region-W"}

    segments = [(s.label, segment_progress(shuttle_run, shuttle, s)) for s in shuttle_run.segments]
    progress = SvgPlotGenerator().progress_svg("a < b & c", segments, 1.0)
    assert ElementTree.fromstring(progress.encode("utf-8")).find(f"{namespace}title").text == "a < b & c"


def test_progress_svg(shuttle, shuttle_run):
    segments = [(s.label, segment_progress(shuttle_run, shuttle, s)) for s in shuttle_run.segments]
    svg = SvgPlotGenerator().progress_svg("shuttle", segments, 1.0)
    assert svg.count("<polyline") == 2 + 2 + 2
    assert svg.count("stroke-dasharray") == 2
    with pytest.raises(ValueError):
        SvgPlotGenerator().progress_svg("shuttle", [], 1.0)


def test_trajectory_csv_is_exact(tmp_path, shuttle_run):
    path = tmp_path / csv_writer.TRAJECTORY
    assert csv_writer.write_trajectory(path, shuttle_run, 2) == shuttle_run.steps
    times, states, controls = csv_writer.read_trajectory(path, 1, 2)
    assert times == shuttle_run.times
    assert np.array_equal(np.array(states), shuttle_run.trajectory())
    assert np.array_equal(np.array(controls), shuttle_run.control_series())
    with pytest.raises(ValueError):
        csv_writer.read_trajectory(path, 2, 2)


def test_load_run_restores_segments(saved_run, shuttle_run):
    stored = RunStore().load_run(saved_run)
    assert stored.result.segments == shuttle_run.segments
    assert stored.result.switch_log == shuttle_run.switch_log
    assert stored.summary.status == "accept"
    assert stored.result.cycles_completed == 1


def test_saved_progress_matches_run(saved_run, shuttle, shuttle_run):
    store = RunStore()
    paths = store.save_progress(saved_run, store.load_run(saved_run))
    rows = csv_writer.read_table(paths["progress"])
    expected = segment_progress(shuttle_run, shuttle, shuttle_run.segments[0])
    first = [r for r in rows if r["segment"] == "0"]
    assert [float(r["weighted_sum"]) for r in first] == expected.weighted_sum.tolist()
    assert first[-1]["increment"] == ""
    assert first[0]["h_west"] == ""
    assert paths["plot"].is_file()


def test_load_run_errors(tmp_path, saved_run):
    with pytest.raises(RunNotFoundError):
        RunStore().load_run(tmp_path / "nowhere")
    trajectory = saved_run / csv_writer.TRAJECTORY
    trajectory.write_text(",".join(csv_writer.trajectory_header(1, 2)) + "\n", encoding="utf-8")
    with pytest.raises(RunNotFoundError):
        RunStore().load_run(saved_run)


def test_summary_one_line(shuttle_run):
    line = summarize("shuttle", shuttle_run).one_line()
    assert line.startswith("verdict=accept cycles=1 max_safety_violation=0.000e+00")
