"""Sanity checks for the dependency-free SVG plotter."""

from singular_bound.svgplot import loglog_plot


def test_structure_and_series():
    series = [{"label": "alpha", "x": [10, 100, 1000], "y": [0.5, 0.1, 0.02]},
              {"label": "beta", "x": [10, 100, 1000], "y": [3.0, 2.0, 1.5]}]
    svg = loglog_plot(series, "n", "risk", "demo")
    assert svg.startswith("<svg")
    assert svg.count("<polyline") == 2
    assert "alpha" in svg and "beta" in svg
    assert "1e1" in svg and "1e3" in svg  # decade tick labels
    assert svg.rstrip().endswith("</svg>")


def test_nonpositive_points_dropped():
    series = [{"label": "s", "x": [10, 100], "y": [0.0, 1.0]}]
    svg = loglog_plot(series, "n", "y", "t")
    # the zero value cannot appear on a log axis; only one marker remains
    assert svg.count("<circle") == 1
