import numpy as np

from consensus_lab.plotting import figsize, plot_error_traces


def test_plot_writes_png(tmp_path):
    path = plot_error_traces({"a": np.linspace(0, -10, 50), "b": np.linspace(0, -5, 30)},
                             tmp_path / "fig.png", title="t")
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_plot_svg_and_golden_ratio(tmp_path):
    path = plot_error_traces({"a": [1.0, 0.5, 0.25]}, tmp_path / "fig.svg")
    assert b"<svg" in path.read_bytes()[:400]
    w, h = figsize(2.0)
    assert w == 11.0 and abs(w / h - 1.618) < 1e-3
