from dataclasses import replace

from clbc.report import render_run_figures, render_sweep_figures, write_run_report
from clbc.runner import run_scenario
from clbc.scenarios import builtin_case1


def _short_trace():
    spec = replace(builtin_case1(), duration=1.0, noise_std=0.0)
    return run_scenario(spec)


def test_run_figures_written(tmp_path):
    trace, _ = _short_trace()
    paths = render_run_figures(trace, str(tmp_path), stem="demo")
    assert len(paths) == 1
    for p in paths:
        assert (tmp_path / p.split("/")[-1]).stat().st_size > 1000


def test_sweep_figure_written(tmp_path):
    trace, _ = _short_trace()
    paths = render_sweep_figures([("a", trace), ("b", trace)], str(tmp_path))
    assert (tmp_path / "sweep_comparison.png").stat().st_size > 1000


def test_write_run_report_bundle(tmp_path):
    trace, metrics = _short_trace()
    paths = write_run_report(trace, metrics, str(tmp_path), stem="bundle")
    assert set(paths) >= {"trace", "summary", "figure0"}
    assert (tmp_path / "bundle_trace.csv").exists()
    assert (tmp_path / "bundle_summary.csv").exists()
