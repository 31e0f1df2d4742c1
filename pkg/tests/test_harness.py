import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gekrig import harness
from gekrig.errors import InvalidArgumentError
from gekrig.harness import (
    CSV_FIELDS,
    ExperimentConfig,
    ExperimentRecord,
    SummaryRow,
    configs_from_dict,
    emit_plot,
    load_preset,
    records_from_csv,
    records_to_csv,
    run_experiment,
    summarize,
    summary_from_csv,
    summary_to_csv,
)

GOLDEN = Path(__file__).parent / "golden" / "tradeoff.svg"


def record(re=0.1, seconds=0.5, trial=0, model="kriging", n=20, **kw):
    base = dict(function="y1", d=2, model=model, h=None, m=None, n=n, trial=trial, seed=trial,
                re=re, fit_seconds=seconds, nugget=2.2e-15)
    base.update(kw)
    return ExperimentRecord(**base)


def without_time(records):
    return [replace(r, fit_seconds=0.0) for r in records]


# --- running ------------------------------------------------------------------------

def test_single_kriging_trial_on_y1_d2():
    recs = run_experiment(ExperimentConfig("y1", 2, "kriging", 20, trials=1, n_v=500))
    assert len(recs) == 1
    assert recs[0].re < 0.2
    assert recs[0].fit_seconds > 0
    assert recs[0].n == 20


def test_same_config_gives_identical_records():
    cfg = ExperimentConfig("y2", 3, "gekpls", 12, m=2, trials=2, n_v=200, base_seed=7)
    assert without_time(run_experiment(cfg)) == without_time(run_experiment(cfg))


def test_gradient_model_trains_on_half():
    recs = run_experiment(ExperimentConfig("y1", 2, "gek_indirect", 12, trials=1, n_v=50))
    assert recs[0].n == 6


def test_odd_n_for_gradient_model_is_rejected():
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig("y1", 2, "gekpls", 21, m=1)


@pytest.mark.parametrize("bad", [dict(trials=0), dict(n_v=0), dict(model="spline"), dict(function="p4", d=3)])
def test_invalid_configs(bad):
    args = dict(function="y1", d=2, model="kriging", n=20)
    args.update(bad)
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(**args)


def test_batch_records_ordered_by_config_and_trial():
    # records come back ordered by (config, trial) whatever the completion order
    cfgs = [ExperimentConfig("y1", 2, "kriging", 8, trials=3, n_v=20),
            ExperimentConfig("y1", 2, "kpls", 8, h=1, trials=2, n_v=20)]
    recs = harness.run_batch(cfgs)
    assert [(r.model, r.trial) for r in recs] == [("kriging", 0), ("kriging", 1), ("kriging", 2),
                                                  ("kpls", 0), ("kpls", 1)]


def test_failed_fits_are_recorded_and_counted(monkeypatch):
    from gekrig.errors import OptimizationFailedError

    def boom(*a, **k):
        raise OptimizationFailedError("forced")

    monkeypatch.setattr(harness, "fit", boom)
    recs = run_experiment(ExperimentConfig("y1", 2, "kriging", 8, trials=2, n_v=10))
    assert len(recs) == 2
    assert all(r.failed for r in recs)
    assert "forced" in recs[0].error


def test_validation_seed_differs_from_training_seed():
    assert harness.VALIDATION_SEED_OFFSET > 10_000


# --- summarize ----------------------------------------------------------------------

def test_summary_of_one_record_is_itself():
    (row,) = summarize([record(0.25, 1.5)])
    assert (row.mean_re, row.mean_fit_seconds, row.trials, row.failed) == (0.25, 1.5, 1, 0)


def test_summary_mean_of_two():
    (row,) = summarize([record(0.1, 1.0, 0), record(0.3, 3.0, 1)])
    assert row.mean_re == pytest.approx(0.2)
    assert row.mean_fit_seconds == pytest.approx(2.0)


def test_summary_excludes_and_counts_failures():
    (row,) = summarize([record(0.1, 1.0, 0), record(math.nan, 9.0, 1)])
    assert row.failed == 1 and row.trials == 2
    assert row.mean_re == pytest.approx(0.1)


def test_all_failed_warns():
    with pytest.warns(RuntimeWarning):
        (row,) = summarize([record(math.nan, 1.0)])
    assert math.isnan(row.mean_re)


def test_summary_groups_cells_in_order():
    recs = [record(0.1, model="kpls", h=1), record(0.2), record(0.3, model="kpls", h=1, trial=1)]
    rows = summarize(recs)
    assert [r.model for r in rows] == ["kpls", "kriging"]
    assert rows[0].mean_re == pytest.approx(0.2)


def test_summary_csv_schema():
    rows = summarize([record(0.1), record(0.2, model="gekpls", m=2, n=10)])
    text = summary_to_csv(rows)
    assert text.splitlines()[0] == ",".join(harness.SUMMARY_FIELDS)
    assert summary_from_csv(text) == rows


# --- CSV ----------------------------------------------------------------------------

def test_records_csv_header_is_fixed():
    assert records_to_csv([]).strip() == "function,d,model,h,m,n,trial,seed,re,fit_seconds,nugget"
    assert ",".join(CSV_FIELDS) == records_to_csv([]).strip()


floats = st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False)
records = st.builds(
    ExperimentRecord,
    function=st.sampled_from(["y1", "y2", "p4"]),
    d=st.integers(1, 100),
    model=st.sampled_from(["kriging", "kpls", "gekpls"]),
    h=st.none() | st.integers(1, 5),
    m=st.none() | st.integers(1, 5),
    n=st.integers(2, 400),
    trial=st.integers(0, 9),
    seed=st.integers(0, 2**31),
    re=floats | st.just(math.nan),
    fit_seconds=floats,
    nugget=floats,
)


def same(a: ExperimentRecord, b: ExperimentRecord) -> bool:
    if math.isnan(a.re):
        return math.isnan(b.re) and replace(a, re=0.0) == replace(b, re=0.0)
    return a == b


@given(st.lists(records, max_size=8))
def test_records_csv_round_trip(recs):
    back = records_from_csv(records_to_csv(recs))
    assert len(back) == len(recs)
    assert all(same(a, b) for a, b in zip(recs, back))


def test_bad_header_is_rejected():
    with pytest.raises(InvalidArgumentError):
        records_from_csv("a,b\n1,2\n")


# --- presets ------------------------------------------------------------------------

def test_presets_load():
    sizes = {name: len(load_preset(name)) for name in harness.PRESETS}
    assert sizes == {"study1": 800, "study2": 64, "study3": 114}


def test_desk_scale_caps_d_and_n():
    for name in harness.PRESETS:
        for cfg in load_preset(name, desk_scale=True):
            assert cfg.d <= harness.DESK_MAX_D
            assert cfg.n <= harness.DESK_MAX_N


def test_study1_desk_block_overrides():
    cfgs = load_preset("study1", desk_scale=True)
    assert {c.trials for c in cfgs} == {3}
    assert {c.n for c in cfgs} == {20, 40, 60}


def test_grid_expansion():
    doc = {"trials": 2, "grid": [{"function": "y1", "d": [4], "n_per_d": [2, 4],
                                  "models": [{"model": "kriging"}, {"model": "gekpls", "m": "d"}]}]}
    cfgs = configs_from_dict(doc)
    assert [(c.model, c.n, c.m) for c in cfgs] == [("kriging", 8, None), ("gekpls", 8, 4),
                                                   ("kriging", 16, None), ("gekpls", 16, 4)]
    assert all(c.trials == 2 for c in cfgs)


def test_load_configs_from_path(tmp_path):
    doc = {"grid": [{"function": "p1", "n": [10], "models": [{"model": "kriging"}]}]}
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(doc))
    (cfg,) = harness.load_configs(str(path))
    assert (cfg.function, cfg.d, cfg.n) == ("p1", 2, 10)


# --- plotting -----------------------------------------------------------------------

def fixed_summary():
    return [
        SummaryRow("y1", 10, "kriging", None, None, 50, 10, 0, 0.05, 0.2),
        SummaryRow("y1", 10, "kriging", None, None, 100, 10, 0, 0.009, 1.1),
        SummaryRow("y1", 10, "gekpls", None, 2, 25, 10, 0, 0.004, 0.08),
        SummaryRow("y1", 10, "gekpls", None, 2, 50, 10, 0, 0.0011, 0.2),
        SummaryRow("y1", 10, "gek_indirect", None, None, 25, 10, 1, 0.002, 12.0),
    ]


def test_empty_summary_draws_axes_only(tmp_path):
    text = emit_plot([], tmp_path / "empty.svg")
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert "<polyline" not in text and "<circle" not in text
    assert "mean relative error" in text


def test_one_series_one_polyline(tmp_path):
    text = emit_plot(fixed_summary()[:2], tmp_path / "one.svg")
    assert text.count("<polyline") == 1
    assert text.count("<circle") == 2


def test_plot_is_byte_stable(tmp_path):
    a = emit_plot(fixed_summary(), tmp_path / "a.svg")
    b = emit_plot(fixed_summary(), tmp_path / "b.svg")
    assert a == b == (tmp_path / "a.svg").read_text()


def test_plot_matches_golden(tmp_path):
    text = emit_plot(fixed_summary(), tmp_path / "plot.svg")
    assert text == GOLDEN.read_text()


def test_points_land_inside_plot_area(tmp_path):
    import re
    text = emit_plot(fixed_summary(), tmp_path / "p.svg")
    for cx, cy in re.findall(r'<circle cx="([\d.]+)" cy="([\d.]+)"', text):
        assert 70 <= float(cx) <= 640 - 170
        assert 20 <= float(cy) <= 480 - 50


def test_nan_rows_are_skipped(tmp_path):
    rows = fixed_summary() + [SummaryRow("y1", 10, "kpls", 1, None, 50, 10, 10, math.nan, math.nan)]
    assert emit_plot(rows, tmp_path / "x.svg") == GOLDEN.read_text()


def test_pool_size_respects_env(monkeypatch):
    monkeypatch.setenv("GEKRIG_THREADS", "3")
    assert harness.pool_size(10) == 3
    assert harness.pool_size(2) == 2
    monkeypatch.delenv("GEKRIG_THREADS")
    assert harness.pool_size(1) == 1


def test_sweep_picks_a_step():
    cfg = ExperimentConfig("y1", 2, "gekpls", 8, m=1, trials=1, n_v=50)
    best, rows, seconds = harness.sweep_step(cfg, steps=(1e-4, 1e-2))
    assert best in (1e-4, 1e-2)
    assert [s for s, _ in rows] == [1e-4, 1e-2]
    assert seconds > 0
    assert best == min((row.mean_re, s) for s, row in rows)[1]


def test_sweep_rejects_value_only_models():
    with pytest.raises(InvalidArgumentError):
        harness.sweep_step(ExperimentConfig("y1", 2, "kriging", 8, trials=1, n_v=5))


def test_validation_points_are_inside_bounds():
    from gekrig.benchmarks import get_function
    f = get_function("p3")
    V = harness._validation_points(f, 100, 3)
    assert V.shape == (100, f.d)
    assert np.all(V >= f.bounds.lower) and np.all(V <= f.bounds.upper)
