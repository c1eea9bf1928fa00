"""Single runs, (J, beta) sweeps, turning points, contours and output writers."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Iterable, Sequence, TextIO

import numpy as np

from .config import MAX_QUBITS, RunConfig, config_dict
from .dfs import build_gate
from .engine import SCHEMA_VERSION, FidelityRecord, PropagatorCache, baseline_free, simulate
from .errors import BudgetExceeded, IncompleteGrid, IncompleteSeries
from .model import SystemModel

CSV_COLUMNS = ("gate", "strategy", "n", "tau0_s", "delta_s", "J_rads", "beta_rads", "fidelity",
               "one_minus_F", "log10_one_minus_F", "floor_clamped", "precision", "wall_time_s",
               "cphase_source")
EXTRA_COLUMNS = ("T_s", "geometry", "bath_count", "blocks", "bath_scaling", "seed", "pack",
                 "schema_version")


def model_from_config(cfg: RunConfig, J: float | None = None, beta: float | None = None) -> SystemModel:
    if cfg.n_qubits > MAX_QUBITS:
        raise BudgetExceeded(f"{cfg.n_qubits} qubits exceeds the {MAX_QUBITS}-qubit budget")
    return SystemModel.build(cfg.geometry, cfg.system_count, cfg.bath_count,
                             cfg.J if J is None else J, cfg.beta if beta is None else beta,
                             cfg.bath_scaling)


def gate_from_config(cfg: RunConfig):
    return build_gate(cfg.gate, cphase_sequence=cfg.cphase_file, seed=cfg.seed)


def _finish(rec: FidelityRecord, timing: bool) -> FidelityRecord:
    if timing:
        return rec
    d = rec.as_dict()
    d["wall_time_s"] = math.nan
    return FidelityRecord(**d)


def run_single(cfg: RunConfig) -> list[FidelityRecord]:
    """Strategy record and free baseline (``T = 4**n tau0``) for each ``n = 0..n_max``."""
    model = model_from_config(cfg)
    gate = gate_from_config(cfg)
    cache = PropagatorCache(model, cfg.precision)
    out = []
    for n in range(cfg.n_max + 1):
        rec = simulate(gate, cfg.strategy, n, cfg.tau0, cfg.delta, model, precision=cfg.precision,
                       cache=cache, pack=cfg.pack, seed=cfg.seed)
        base = baseline_free(gate, 4 ** n * cfg.tau0, model, precision=cfg.precision, cache=cache,
                             n=n, tau0=cfg.tau0, seed=cfg.seed)
        out += [_finish(rec, cfg.record_timing), _finish(base, cfg.record_timing)]
    return out


@dataclass(frozen=True)
class SweepGrid:
    """Log-spaced (J, beta) grid at fixed level range, pulse width and gate."""

    J_values: tuple[float, ...]
    beta_values: tuple[float, ...]
    n_max: int
    delta: float = 0.0
    gate: str = "pi8"
    strategy: str = "while"

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "SweepGrid":
        return cls(tuple(cfg.J_values), tuple(cfg.beta_values), cfg.n_max, cfg.delta, cfg.gate,
                   cfg.strategy)

    @property
    def size(self) -> int:
        return len(self.J_values) * len(self.beta_values) * (self.n_max + 1)

    def cells(self) -> list[tuple[float, float]]:
        return [(J, b) for J in self.J_values for b in self.beta_values]


def _sweep_cell(args) -> list[FidelityRecord]:
    cfg, J, beta = args
    model = model_from_config(cfg, J, beta)
    gate = gate_from_config(cfg)
    cache = PropagatorCache(model, cfg.precision)
    return [_finish(simulate(gate, cfg.strategy, n, cfg.tau0, cfg.delta, model, precision=cfg.precision,
                             cache=cache, pack=cfg.pack, seed=cfg.seed), cfg.record_timing)
            for n in range(cfg.n_max + 1)]


def run_sweep(cfg: RunConfig, grid: SweepGrid | None = None, workers: int | None = None) -> list[FidelityRecord]:
    """One record per (J, beta, n) cell, ordered by J, then beta, then n.

    Cells run in a process pool when ``workers > 1``; the output order and
    contents do not depend on the worker count.
    """
    grid = grid or SweepGrid.from_config(cfg)
    cfg = cfg.replace(n_max=grid.n_max, delta=grid.delta, gate=grid.gate, strategy=grid.strategy)
    if grid.size > cfg.budget:
        raise BudgetExceeded(f"sweep needs {grid.size} simulations, budget is {cfg.budget}")
    if any(not (v > 0) for v in grid.J_values + grid.beta_values):
        raise ValueError("sweep values must be > 0")
    jobs = [(cfg, J, b) for J, b in grid.cells()]
    workers = cfg.workers if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        gate_from_config(cfg)  # fail fast on a bad sequence file
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            chunks = list(pool.map(_sweep_cell, jobs))
    else:
        chunks = [_sweep_cell(job) for job in jobs]
    return [rec for chunk in chunks for rec in chunk]


# --- analysis ---------------------------------------------------------------------------

def _series(records: Iterable[FidelityRecord]) -> list[FidelityRecord]:
    recs = sorted(records, key=lambda r: r.n)
    if not recs:
        raise IncompleteSeries("no records")
    ns = [r.n for r in recs]
    if ns != list(range(len(recs))):
        raise IncompleteSeries(f"records must cover n = 0..{len(recs) - 1} exactly once, got {ns}")
    cells = {(r.J_rads, r.beta_rads, r.gate, r.strategy) for r in recs}
    if len(cells) != 1:
        raise IncompleteSeries("records mix several cells")
    return recs


def turning_point(records: Iterable[FidelityRecord]) -> int:
    """Largest ``n*`` with ``1 - F`` strictly decreasing on ``0..n*``.

    A floor-clamped record ends the scan: hitting the floor is not counted
    as a decrease.
    """
    recs = _series(records)
    best = 0
    for prev, cur in zip(recs, recs[1:]):
        if cur.floor_clamped or prev.floor_clamped or not cur.one_minus_F < prev.one_minus_F:
            break
        best = cur.n
    return best


def group_cells(records: Iterable[FidelityRecord]) -> dict[tuple[float, float], list[FidelityRecord]]:
    out: dict = {}
    for r in records:
        out.setdefault((r.J_rads, r.beta_rads), []).append(r)
    return out


def turning_point_map(records: Iterable[FidelityRecord]) -> dict[tuple[float, float], int]:
    return {cell: turning_point(recs) for cell, recs in group_cells(records).items()}


@dataclass(frozen=True)
class ContourGrid:
    """``values[i, j]`` is ``log10(1-F)`` at ``beta_axis[i]``, ``J_axis[j]`` (both times tau0)."""

    J_axis: tuple[float, ...]
    beta_axis: tuple[float, ...]
    values: np.ndarray
    n: int
    delta: float
    tau0: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def spread_along_J(self) -> float:
        """Mean over beta rows of the max-min range along J."""
        return float(np.mean(np.ptp(self.values, axis=1)))

    def spread_along_beta(self) -> float:
        return float(np.mean(np.ptp(self.values, axis=0)))


def contour_export(records: Iterable[FidelityRecord], n: int, delta: float,
                   J_values: Sequence[float] | None = None,
                   beta_values: Sequence[float] | None = None) -> ContourGrid:
    """Rectangular ``log10(1 - F)`` grid at fixed ``(n, delta)`` with axes ``J tau0``, ``beta tau0``."""
    sel = [r for r in records if r.n == n and r.delta_s == delta]
    if not sel:
        raise IncompleteGrid(f"no records at n={n}, delta={delta}")
    taus = {r.tau0_s for r in sel}
    if len(taus) != 1:
        raise IncompleteGrid("records mix several tau0 values")
    tau0 = taus.pop()
    Js = sorted({r.J_rads for r in sel}) if J_values is None else list(J_values)
    bs = sorted({r.beta_rads for r in sel}) if beta_values is None else list(beta_values)
    table = {}
    for r in sel:
        if (r.J_rads, r.beta_rads) in table:
            raise IncompleteGrid(f"duplicate cell J={r.J_rads}, beta={r.beta_rads}")
        table[(r.J_rads, r.beta_rads)] = r.log10_one_minus_F
    vals = np.empty((len(bs), len(Js)))
    for i, b in enumerate(bs):
        for j, J in enumerate(Js):
            if (J, b) not in table:
                raise IncompleteGrid(f"missing cell J={J}, beta={b} at n={n}")
            vals[i, j] = table[(J, b)]
    return ContourGrid(tuple(J * tau0 for J in Js), tuple(b * tau0 for b in bs), vals, n, delta, tau0)


# --- writers --------------------------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def record_row(rec: FidelityRecord) -> list[str]:
    d = rec.as_dict()
    return [_cell(d[c]) for c in CSV_COLUMNS + EXTRA_COLUMNS]


def write_csv(records: Iterable[FidelityRecord], stream: TextIO) -> None:
    """Fixed header; ``wall_time_s`` is blank when timing was not recorded."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS + EXTRA_COLUMNS)
    for rec in records:
        w.writerow(record_row(rec))


def records_to_csv(records: Iterable[FidelityRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(stream: TextIO) -> list[FidelityRecord]:
    types = {f.name: f.type for f in fields(FidelityRecord)}
    out = []
    for row in csv.DictReader(stream):
        d = {}
        for k, v in row.items():
            t = types[k]
            if t in ("float", float):
                d[k] = math.nan if v == "" else float(v)
            elif t in ("int", int):
                d[k] = int(v)
            elif t in ("bool", bool):
                d[k] = v == "true"
            else:
                d[k] = v
        out.append(FidelityRecord(**d))
    return out


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def records_to_json(records: Iterable[FidelityRecord], cfg: RunConfig | None = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION,
           "columns": list(CSV_COLUMNS + EXTRA_COLUMNS),
           "records": [{k: _json_value(v) for k, v in r.as_dict().items()} for r in records]}
    if cfg is not None:
        doc["config"] = config_dict(cfg)
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def contour_to_text(grid: ContourGrid) -> str:
    """gnuplot ``splot`` layout: ``Jtau0 betatau0 log10(1-F)``, blank line between beta rows."""
    lines = [f"# schema_version {SCHEMA_VERSION}", f"# n {grid.n} delta_s {grid.delta!r} tau0_s {grid.tau0!r}",
             "# J_tau0 beta_tau0 log10_one_minus_F"]
    for i, b in enumerate(grid.beta_axis):
        for j, J in enumerate(grid.J_axis):
            lines.append(f"{J!r} {b!r} {float(grid.values[i, j])!r}")
        lines.append("")
    return "\n".join(lines) + "\n"


def contour_to_json(grid: ContourGrid) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "n": grid.n, "delta_s": grid.delta, "tau0_s": grid.tau0,
           "J_tau0": list(grid.J_axis), "beta_tau0": list(grid.beta_axis),
           "log10_one_minus_F": grid.values.tolist()}
    return json.dumps(doc, indent=2) + "\n"
