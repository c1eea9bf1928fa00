from __future__ import annotations

import dataclasses
import io
import math

import numpy as np
import pytest

from cddsim.config import RunConfig
from cddsim.engine import FidelityRecord
from cddsim.errors import BudgetExceeded, IncompleteGrid, IncompleteSeries
from cddsim.sweep import (CSV_COLUMNS, SweepGrid, contour_export, contour_to_text, read_csv, records_to_csv,
                          records_to_json, run_single, run_sweep, turning_point, turning_point_map)

EPS_FLOOR = 64 * float(np.finfo(float).eps)


def record(n: int, one_minus_F: float, J: float = 1e4, beta: float = 1e6, **kw) -> FidelityRecord:
    clamped = bool(one_minus_F <= EPS_FLOOR)
    val = max(one_minus_F, EPS_FLOOR)
    base = dict(gate="pi8", strategy="while", n=n, tau0_s=1e-9, delta_s=0.0, J_rads=J, beta_rads=beta,
                fidelity=1 - val, one_minus_F=val, log10_one_minus_F=math.log10(val), floor_clamped=clamped,
                precision="standard", wall_time_s=math.nan, cphase_source="", T_s=4 ** n * 1e-9,
                geometry="linear", bath_count=2, blocks=1, bath_scaling=1.0, seed=1)
    base.update(kw)
    return FidelityRecord(**base)


def series(values, **kw):
    return [record(n, v, **kw) for n, v in enumerate(values)]


def test_run_single_level_zero():
    recs = run_single(RunConfig(gate="memory", n_max=0))
    assert len(recs) == 2
    cdd, base = recs
    assert base.strategy == "free" and base.T_s == 1e-9
    assert cdd.one_minus_F == pytest.approx(base.one_minus_F, rel=1e-9)
    assert all(math.isnan(r.wall_time_s) for r in recs)


def test_run_single_baseline_times():
    recs = run_single(RunConfig(gate="memory", n_max=2))
    assert [r.T_s for r in recs[1::2]] == pytest.approx([1e-9, 4e-9, 16e-9])
    assert [r.n for r in recs] == [0, 0, 1, 1, 2, 2]


def test_turning_point_examples():
    assert turning_point(series([1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8])) == 5
    assert turning_point(series([1e-3, 1e-2, 1e-1])) == 0
    assert turning_point(series([1e-3, 1e-4, 1e-3, 1e-6])) == 1
    # equal values are not an improvement
    assert turning_point(series([1e-3, 1e-3])) == 0
    assert turning_point(series([1e-3])) == 0


def test_turning_point_stops_at_floor():
    assert turning_point(series([1e-8, 1e-11, 0.0, 0.0])) == 1


def test_turning_point_incomplete_series():
    with pytest.raises(IncompleteSeries):
        turning_point([])
    with pytest.raises(IncompleteSeries):
        turning_point([record(0, 1e-3), record(2, 1e-4)])
    with pytest.raises(IncompleteSeries):
        turning_point([record(0, 1e-3), record(1, 1e-4, J=2e4)])


def test_turning_point_map_groups_cells():
    recs = series([1e-3, 1e-4], J=1.0) + series([1e-3, 1e-2], J=2.0)
    assert turning_point_map(recs) == {(1.0, 1e6): 1, (2.0, 1e6): 0}


def test_contour_export_axes_and_shape():
    recs = [record(1, 1e-6 * J * b, J=J, beta=b) for J in (1.0, 10.0, 100.0) for b in (2.0, 20.0)]
    grid = contour_export(recs, 1, 0.0)
    assert grid.shape == (2, 3)
    assert grid.J_axis == pytest.approx((1e-9, 1e-8, 1e-7))
    assert grid.beta_axis == pytest.approx((2e-9, 2e-8))
    assert grid.values[1, 2] == pytest.approx(math.log10(1e-6 * 100 * 20))
    assert grid.spread_along_J() == pytest.approx(2.0)
    assert grid.spread_along_beta() == pytest.approx(1.0)
    text = contour_to_text(grid)
    rows = [ln.split() for ln in text.splitlines() if ln and not ln.startswith("#")]
    assert len(rows) == 6
    assert [float(x) for x in rows[-1]] == pytest.approx([1e-7, 2e-8, math.log10(2e-3)])


def test_contour_export_incomplete():
    recs = [record(1, 1e-6, J=J, beta=b) for J, b in ((1.0, 1.0), (2.0, 1.0), (1.0, 2.0))]
    with pytest.raises(IncompleteGrid):
        contour_export(recs, 1, 0.0)
    with pytest.raises(IncompleteGrid):
        contour_export(recs, 3, 0.0)
    with pytest.raises(IncompleteGrid):
        contour_export(recs[:1] * 2, 1, 0.0)


def test_grid_size_and_budget():
    cfg = RunConfig(n_max=3, J_values=tuple(10.0 ** k for k in range(7)),
                    beta_values=tuple(10.0 ** k for k in range(7)))
    assert SweepGrid.from_config(cfg).size == 196
    with pytest.raises(BudgetExceeded):
        run_sweep(cfg.replace(budget=195))


def test_sweep_order_and_worker_independence():
    cfg = RunConfig(gate="pi8", n_max=1, J_values=(1e3, 1e5), beta_values=(1e5,))
    serial = run_sweep(cfg)
    assert [(r.J_rads, r.n) for r in serial] == [(1e3, 0), (1e3, 1), (1e5, 0), (1e5, 1)]
    pooled = run_sweep(cfg, workers=2)
    assert records_to_csv(serial) == records_to_csv(pooled)


def test_csv_roundtrip_with_blank_wall_time():
    recs = series([1e-3, 1e-5, 0.0])
    text = records_to_csv(recs)
    header = text.splitlines()[0].split(",")
    assert tuple(header[:len(CSV_COLUMNS)]) == CSV_COLUMNS
    assert all(",," in line for line in text.splitlines()[1:])
    back = read_csv(io.StringIO(text))
    for a, b in zip(recs, back):
        da, db = dataclasses.asdict(a), dataclasses.asdict(b)
        assert math.isnan(da.pop("wall_time_s")) and math.isnan(db.pop("wall_time_s"))
        assert da == db


def test_json_has_schema_and_null_wall_time():
    import json

    doc = json.loads(records_to_json(series([1e-3]), RunConfig()))
    assert doc["schema_version"] == 1
    assert doc["records"][0]["wall_time_s"] is None
    assert doc["config"]["gate"] == "pi8"
