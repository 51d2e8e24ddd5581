"""Deterministic SVG output: well-formed XML, stable bytes, full coverage."""

import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from landmarklift.errors import DegenerateInputError
from landmarklift.svgplot import curves_svg, scatter_svg


def _points():
    rng = np.random.default_rng(7)
    return rng.normal(size=(20, 2))


def test_scatter_is_well_formed_xml():
    svg = scatter_svg([("truth", _points())], title="front view")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")


def test_curves_is_well_formed_xml():
    svg = curves_svg({"train": np.linspace(1.0, 0.1, 10)})
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")


def test_scatter_bytes_deterministic():
    groups = [("a", _points()), ("b", _points() + 0.5)]
    assert scatter_svg(groups, title="t") == scatter_svg(groups, title="t")


def test_scatter_has_no_timestamps_or_random_ids():
    svg = scatter_svg([("a", _points())], title="t")
    assert not re.search(r"\b20\d\d-\d\d-\d\d\b", svg)
    assert "id=" not in svg


def test_scatter_markers_cover_every_point():
    pts = _points()
    svg = scatter_svg([("only", pts)])
    assert svg.count("<circle") == len(pts) + 1  # one extra: legend marker


def test_two_groups_use_distinct_markers():
    svg = scatter_svg([("pred", _points()), ("truth", _points())])
    assert "<circle" in svg
    assert "<path" in svg or "<line" in svg


def test_scatter_axis_covers_extremes():
    pts = np.array([[-3.5, 2.0], [4.25, -1.75]])
    svg = scatter_svg([("x", pts)])
    numbers = [float(t) for t in re.findall(r">(-?\d+\.?\d*)</text>", svg)]
    assert min(numbers) <= -3.5
    assert max(numbers) >= 4.25


def test_identical_groups_draw_identical_positions():
    pts = _points()
    svg = scatter_svg([("pred", pts), ("truth", pts)])
    cx = re.findall(r'cx="([^"]+)"', svg)
    assert len(set(cx)) <= len(pts) + 1


def test_scatter_empty_rejected():
    with pytest.raises(DegenerateInputError):
        scatter_svg([])
    with pytest.raises(DegenerateInputError):
        scatter_svg([("a", np.empty((0, 2)))])


def test_curves_empty_rejected():
    with pytest.raises(DegenerateInputError):
        curves_svg({})
    with pytest.raises(DegenerateInputError):
        curves_svg({"a": np.array([])})


def test_curves_one_polyline_per_series():
    svg = curves_svg(
        {"train": np.linspace(1, 0, 8), "val": np.linspace(2, 1, 8)}
    )
    assert svg.count("<polyline") >= 2


def test_curves_deterministic():
    series = {"train": np.geomspace(1.0, 1e-3, 20)}
    assert curves_svg(series) == curves_svg(series)


def test_labels_appear_in_output():
    svg = scatter_svg(
        [("pred", _points())], title="face 3", xlabel="u", ylabel="v"
    )
    for token in ("face 3", "u", "v", "pred"):
        assert token in svg
