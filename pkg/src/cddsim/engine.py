"""Propagation of schedules, fidelities, baselines and diagnostics.

Internally everything runs in the "x-frame": operators conjugated by a
Hadamard on every qubit.  Interval generators and X-pulse generators
conserve total ``S_x``, which in that frame is the Hamming weight of the
basis index, so their exponentials are block diagonal with blocks of size
``C(n, k)``.  Fidelities are frame independent (the frame change is a
product of system and bath unitaries), and :func:`propagate` converts its
result back to the computational frame.
"""
from __future__ import annotations

import math
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np

from .core import linalg, structured
from .core.dd import DDArray, as_dd, dd_scalar, sqrt_real
from .core.pauli import PauliString, dense_blocks, popcount_groups
from .core.precision import STANDARD, Precision, get_precision
from .dfs import CPHASE_SEED, LogicalGate, build_gate, encode, logical_amplitudes, logical_state
from .errors import BudgetExceeded, DimensionMismatch
from .model import SystemModel
from .sequence import (DEFAULT_TAU0, Generator, Leaf, Schedule, Seq, Segment, decouple_then_compute,
                       decouple_while_compute, free_evolution_schedule)

STRATEGIES = ("while", "then", "free")
SCHEMA_VERSION = 1
MAX_QUBITS = 12
# flop-equivalent of one Python-level block operation, for method selection
CALL_OVERHEAD = 2e4


@dataclass(frozen=True)
class FidelityRecord:
    """Outcome of one simulation with its full provenance."""

    gate: str
    strategy: str
    n: int
    tau0_s: float
    delta_s: float
    J_rads: float
    beta_rads: float
    fidelity: float
    one_minus_F: float
    log10_one_minus_F: float
    floor_clamped: bool
    precision: str
    wall_time_s: float
    cphase_source: str
    T_s: float
    geometry: str
    bath_count: int
    blocks: int
    bath_scaling: float
    seed: int
    pack: bool = True
    schema_version: int = SCHEMA_VERSION

    def as_dict(self) -> dict:
        return asdict(self)


class PropagatorCache:
    """Memoised eigensystems, segment unitaries and node propagators.

    Bound to one model and one precision; keys are generator values,
    segment labels and interned tree keys, so only physically identical
    pieces are shared.  Safe to share between threads.
    """

    def __init__(self, model: SystemModel, precision: Precision | str = STANDARD):
        self.model = model
        self.precision = get_precision(precision)
        self.eigensystems: dict = {}
        self.segments: dict = {}
        self.nodes: dict = {}
        self._lock = threading.RLock()
        self._partition = structured.Partition(tuple(popcount_groups(model.n_qubits)), model.dim)

    def check(self, model: SystemModel, precision: Precision) -> None:
        if model.fingerprint() != self.model.fingerprint() or precision != self.precision:
            raise ValueError("propagator cache belongs to a different model or precision")

    def clear(self) -> None:
        with self._lock:
            self.eigensystems.clear()
            self.segments.clear()
            self.nodes.clear()

    # -- generators ---------------------------------------------------------

    def _terms(self, gen: Generator):
        m = self.model
        rest = m.exchange_terms(gen.exchange)
        if gen.bath:
            rest = rest + m.sb_terms + m.b_terms
        pulse = m.pulse_terms(gen.pulse_axis) if gen.pulse_axis else None
        return rest, pulse

    def _amplitude(self, gen: Generator):
        if self.precision.extended:
            with mpmath.workprec(160):
                return dd_scalar(mpmath.pi / (2 * mpmath.mpf(gen.pulse_width)))
        return gen.pulse_amplitude

    def eigensystem(self, gen: Generator):
        """``(partition, Eigensystem)`` of a generator in the x-frame."""
        with self._lock:
            hit = self.eigensystems.get(gen)
        if hit is not None:
            return hit
        rest, pulse = self._terms(gen)
        part = self._partition
        rb = dense_blocks(rest, list(part.groups), "x")
        pb = dense_blocks(pulse, list(part.groups), "x") if pulse is not None else None
        ext = self.precision.extended
        if rb is not None and (pulse is None or pb is not None):
            blocks = []
            for k in range(len(rb)):
                h = as_dd(rb[k]) if ext else rb[k]
                if pb is not None:
                    h = h + self._amplitude(gen) * (as_dd(pb[k]) if ext else pb[k])
                blocks.append(h)
            es = _blockwise_eigensystem(part, blocks)
            result = (part, es)
        else:
            h = rest.dense("x")
            h = as_dd(h) if ext else h
            if pulse is not None:
                p = pulse.dense("x")
                h = h + self._amplitude(gen) * (as_dd(p) if ext else p)
            es = linalg.eigensystem(h)
            groups = tuple(idx for idx, _, _ in es.blocks)
            result = (structured.Partition(groups, self.model.dim), es)
        with self._lock:
            self.eigensystems.setdefault(gen, result)
        return result

    def piece(self, gen: Generator, duration: float):
        part, es = self.eigensystem(gen)
        t = dd_scalar(mpmath.mpf(duration)) if self.precision.extended else duration
        blocks = [u for _, u in es.block_unitaries(t)]
        return structured.block_diag_or_dense(part, blocks)

    # -- segments and nodes -------------------------------------------------

    def segment(self, seg: Segment):
        key = seg.label
        with self._lock:
            hit = self.segments.get(key)
        if hit is not None:
            return hit
        if seg.is_ideal:
            op = ideal_pulse_xframe(seg.ideal_axis, self.model.system_count, self.model.n_qubits)
        else:
            op = None
            for gen, dur in seg.pieces():
                u = self.piece(gen, dur)
                op = u if op is None else structured.matmul(u, op)
        with self._lock:
            self.segments.setdefault(key, op)
        return op

    def node(self, node):
        with self._lock:
            hit = self.nodes.get(node.key)
        if hit is not None:
            return hit
        if isinstance(node, Leaf):
            op = self.segment(node.segment)
        else:
            op = None
            for child in node.children:
                u = self.node(child)
                op = u if op is None else structured.matmul(u, op)
        with self._lock:
            self.nodes.setdefault(node.key, op)
        return op

    # -- cost model -----------------------------------------------------------

    def _apply_cost(self, op) -> float:
        if isinstance(op, structured.Monomial):
            return op.dim + CALL_OVERHEAD
        if isinstance(op, structured.BlockDiag):
            return sum(len(g) ** 2 for g in op.partition.groups) + CALL_OVERHEAD * len(op.blocks)
        return op.dim ** 2 + CALL_OVERHEAD

    def costs(self, root) -> tuple[float, float]:
        """``(operator, vector)`` cost estimates for evolving one state.

        The operator route builds each distinct sub-block once (dense
        products in the worst case); the vector route applies every segment
        in turn.
        """
        d = float(self.model.dim)
        vec: dict = {}
        seqs: dict = {}
        stack = [root]
        while stack:
            node = stack.pop()
            if node.key in vec:
                continue
            if isinstance(node, Leaf):
                vec[node.key] = self._apply_cost(self.segment(node.segment))
                continue
            pending = [c for c in node.children if c.key not in vec]
            if pending:
                stack.append(node)
                stack.extend(pending)
                continue
            vec[node.key] = sum(vec[c.key] for c in node.children)
            seqs[node.key] = len(node.children) - 1
        op_cost = sum(seqs.values()) * d ** 3 + d ** 2
        return op_cost, vec[root.key]

    def evolve(self, node, v):
        """Apply ``node`` to state ``v`` segment by segment (time order)."""
        if isinstance(node, Leaf):
            return structured.apply(self.segment(node.segment), v)
        for child in node.children:
            v = self.evolve(child, v)
        return v


def _blockwise_eigensystem(part, blocks) -> linalg.Eigensystem:
    out = []
    for idx, h in zip(part.groups, blocks):
        if isinstance(h, DDArray):
            w, v = linalg.dd_eigh(h)
        else:
            linalg.check_hermitian(h)
            # same-axis two-body terms render real in either frame
            w, v = np.linalg.eigh(h.real if not h.imag.any() else h)
        out.append((idx, w, v))
    return linalg.Eigensystem(part.dim, out)


def ideal_pulse_xframe(axis: str, system_count: int, n_qubits: int) -> structured.Monomial:
    """Global ideal pulse as a signed permutation in the x-frame."""
    sign, p = PauliString.from_map(n_qubits, {j: axis for j in range(system_count)}).in_xframe()
    rows, phases = p.permutation()
    return structured.Monomial(rows, phases * sign)


def _cache_for(model, precision, cache) -> PropagatorCache:
    if cache is None:
        return PropagatorCache(model, precision)
    cache.check(model, precision)
    return cache


def propagate_xframe(schedule: Schedule, model: SystemModel, precision: Precision | str = STANDARD,
                     cache: PropagatorCache | None = None):
    """Structured x-frame propagator of a schedule."""
    prec = get_precision(precision)
    cache = _cache_for(model, prec, cache)
    if schedule.root is None:
        return structured.Monomial(np.arange(model.dim), np.ones(model.dim, dtype=complex))
    return cache.node(schedule.root)


def evolve(schedule: Schedule, state, model: SystemModel, precision: Precision | str = STANDARD,
           cache: PropagatorCache | None = None, method: str = "auto"):
    """Final x-frame state from an x-frame initial state.

    ``method='operator'`` builds the reusable propagator; ``'vector'``
    applies segments one by one; ``'auto'`` picks the cheaper by a fixed
    cost model, so the choice is a deterministic function of the schedule
    and model.
    """
    prec = get_precision(precision)
    cache = _cache_for(model, prec, cache)
    if schedule.root is None:
        return state
    if method == "auto":
        op_cost, vec_cost = cache.costs(schedule.root)
        method = "operator" if op_cost <= vec_cost else "vector"
    if method == "operator":
        return structured.apply(cache.node(schedule.root), state)
    if method == "vector":
        return cache.evolve(schedule.root, state)
    raise ValueError(f"unknown method {method!r}; expected auto, operator or vector")


def propagate(schedule: Schedule, model: SystemModel, precision: Precision | str = STANDARD,
              cache: PropagatorCache | None = None, frame: str = "z"):
    """Time-ordered propagator of ``schedule`` as a dense operator.

    Each distinct sub-block of the recursion is computed once, so a level-n
    sequence costs O(n) block products plus one eigendecomposition per
    distinct generator.  ``frame='x'`` skips the conversion back to the
    computational frame.
    """
    prec = get_precision(precision)
    op = propagate_xframe(schedule, model, prec, cache)
    u = structured.to_dense(op)
    if prec.extended:
        u = as_dd(u)
    if frame == "x":
        return u
    return linalg.walsh_hadamard(linalg.walsh_hadamard(u, 0), 1)


# --- fidelity -------------------------------------------------------------------------

def residual_infidelity(final, target, system_qubits: int, bath_qubits: int) -> float:
    """``1 - F`` with ``F = sqrt(<psi| Tr_B |Psi><Psi| |psi>)``.

    Computed from the component of ``Psi`` orthogonal to ``psi (x) bath``,
    which keeps full relative accuracy when ``1 - F`` is far below epsilon.
    The norm of ``Psi`` is divided out.
    """
    ds, db = 2 ** system_qubits, 2 ** bath_qubits
    if final.shape != (ds * db,) or target.shape != (ds,):
        raise DimensionMismatch("state dimensions do not match the qubit counts")
    m = final.reshape(ds, db)
    if isinstance(m, DDArray):
        t = as_dd(target)
        c = t.conj().reshape(1, ds) @ m
        r = m - t.reshape(ds, 1) * c
        x = r.abs2().sum() / m.abs2().sum()
        f = sqrt_real(1.0 - x)
        omf = x / (1.0 + f)
        h, l = omf.real_value()
        return h + l
    c = target.conj() @ m
    r = m - np.outer(target, c)
    x = float(np.vdot(r, r).real / np.vdot(m, m).real)
    return x / (1.0 + math.sqrt(max(0.0, 1.0 - x)))


def reduced_state(final, system_qubits: int, bath_qubits: int):
    """``Tr_B |Psi><Psi|``."""
    ds, db = 2 ** system_qubits, 2 ** bath_qubits
    m = final.reshape(ds, db)
    return m @ linalg.dagger(m)


def fidelity_from_rho(rho, target) -> float:
    """``sqrt(|<psi| rho |psi>|)`` (double precision)."""
    rho = np.asarray(rho, dtype=complex)
    return math.sqrt(abs(np.vdot(target, rho @ target)))


# --- simulation ---------------------------------------------------------------------------

def _resolve_gate(gate, model: SystemModel, seed: int) -> LogicalGate:
    g = build_gate(gate, seed=seed) if isinstance(gate, str) else gate
    return g.on_blocks(model.blocks)


def _default_amplitudes(blocks: int):
    return [(0.0, 1.0)] * blocks if blocks > 1 else (0.0, 1.0)


def build_schedule(gate: LogicalGate, strategy: str, n: int, tau0: float, delta: float,
                   model: SystemModel | None = None, pack: bool = True) -> Schedule:
    if strategy == "while":
        return decouple_while_compute(gate, n, tau0, delta, model, pack=pack)
    if strategy == "then":
        return decouple_then_compute(gate, n, tau0, delta, model)
    if strategy == "free":
        return free_evolution_schedule(gate, 4 ** n * tau0, model)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def _xframe_state(state: np.ndarray, system_qubits: int, bath_qubits: int) -> np.ndarray:
    m = state.reshape(2 ** system_qubits, 2 ** bath_qubits)
    m = linalg.walsh_hadamard(linalg.walsh_hadamard(m, 0), 1)
    return m.reshape(-1)


def run_schedule(schedule: Schedule, gate: LogicalGate, model: SystemModel, amplitudes=None,
                 precision: Precision | str = STANDARD, cache: PropagatorCache | None = None,
                 *, strategy: str | None = None, n: int | None = None, seed: int = CPHASE_SEED,
                 method: str = "auto") -> FidelityRecord:
    """Propagate a prepared schedule from the encoded initial state."""
    prec = get_precision(precision)
    start = time.perf_counter()
    blocks = model.blocks
    gate = gate.on_blocks(blocks)
    amps = _default_amplitudes(blocks) if amplitudes is None else amplitudes
    logical = logical_amplitudes(amps, blocks)
    ns, nb = model.system_count, model.bath_count
    psi0 = _xframe_state(encode(amps, blocks, nb), ns, nb)
    target = linalg.walsh_hadamard(logical_state(gate.target @ logical, blocks), 0)
    final = evolve(schedule, prec.lift(psi0), model, prec, cache, method)
    omf = residual_infidelity(final, prec.lift(target) if prec.extended else target, ns, nb)
    omf = max(omf, 0.0)
    floor = prec.floor
    clamped = omf < floor
    wall = time.perf_counter() - start
    return FidelityRecord(
        gate=gate.name, strategy=strategy or schedule.kind, n=schedule.level if n is None else n,
        tau0_s=schedule.tau0,
        delta_s=schedule.delta, J_rads=model.J, beta_rads=model.beta,
        fidelity=1.0 - omf, one_minus_F=omf, log10_one_minus_F=math.log10(max(omf, floor)),
        floor_clamped=bool(clamped), precision=prec.name, wall_time_s=wall,
        cphase_source=gate.source if gate.name == "cphase" else "",
        T_s=schedule.total_time, geometry=model.geometry.kind, bath_count=nb, blocks=blocks,
        bath_scaling=model.bath_scaling, seed=seed)


def simulate(gate, strategy: str, n: int, tau0: float = DEFAULT_TAU0, delta: float = 0.0,
             model: SystemModel | None = None, amplitudes=None,
             precision: Precision | str = STANDARD, cache: PropagatorCache | None = None,
             *, pack: bool = True, seed: int = CPHASE_SEED, method: str = "auto") -> FidelityRecord:
    """Fidelity of ``gate`` under the given strategy at level ``n``.

    The initial state defaults to logical one in every block, tensored with
    the uniform bath superposition.  ``strategy='free'`` is unprotected
    evolution for ``T = 4**n tau0``.
    """
    if model is None:
        model = SystemModel.build()
    g = _resolve_gate(gate, model, seed)
    sched = build_schedule(g, strategy, n, tau0, delta, model, pack)
    rec = run_schedule(sched, g, model, amplitudes, precision, cache, strategy=strategy, n=n, seed=seed,
                       method=method)
    if strategy == "free":
        return _replace(rec, tau0_s=float(tau0), delta_s=0.0, pack=pack)
    return _replace(rec, pack=pack)


def baseline_free(gate, T: float, model: SystemModel | None = None, amplitudes=None,
                  precision: Precision | str = STANDARD, cache: PropagatorCache | None = None,
                  *, n: int | None = None, tau0: float | None = None, seed: int = CPHASE_SEED) -> FidelityRecord:
    """Unprotected evolution for time ``T`` (the dashed-line reference)."""
    if model is None:
        model = SystemModel.build()
    g = _resolve_gate(gate, model, seed)
    sched = free_evolution_schedule(g, T, model)
    rec = run_schedule(sched, g, model, amplitudes, precision, cache, strategy="free",
                       n=-1 if n is None else n, seed=seed)
    return _replace(rec, tau0_s=float(T if tau0 is None else tau0), delta_s=0.0)


def _replace(rec: FidelityRecord, **kw) -> FidelityRecord:
    d = rec.as_dict()
    d.update(kw)
    return FidelityRecord(**d)


# --- diagnostics --------------------------------------------------------------------------

def decoupling_condition_residual(pulses: Sequence, h_sb) -> float:
    """Spectral norm of the group average ``(1/|G|) sum_a P_a^dagger H_SB P_a``."""
    d = h_sb.shape[0]
    total = None
    for k, p in enumerate(pulses):
        if p.shape != (d, d):
            raise DimensionMismatch(f"pulse {k} has shape {p.shape}, expected {(d, d)}")
        term = linalg.dagger(p) @ h_sb @ p
        total = term if total is None else total + term
    if total is None:
        raise DimensionMismatch("at least one pulse is required")
    avg = total * (1.0 / (k + 1))
    return linalg.spectral_norm((avg + linalg.dagger(avg)) * 0.5)


@dataclass(frozen=True)
class BathScalingReport:
    """Fit of ``log10(1 - F)`` against bath size and the implied J multiplier."""

    bath_sizes: tuple[int, ...]
    one_minus_F: tuple[float, ...]
    slope: float
    intercept: float
    exponent: float
    multiplier: float
    reference_size: int
    target_size: int
    applied: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.bath_sizes, self.one_minus_F))


def memory_observable(T_intervals: int = 16, tau0: float = DEFAULT_TAU0) -> Callable[[SystemModel], float]:
    """Default calibration observable: 1-F of unprotected memory over ``T_intervals * tau0``."""
    def observe(model: SystemModel) -> float:
        gate = build_gate("memory").on_blocks(model.blocks)
        return baseline_free(gate, T_intervals * tau0, model).one_minus_F
    return observe


def calibrate_bath_scaling(template: SystemModel, bath_sizes: Sequence[int] = (2, 3, 4, 5),
                           observable: Callable[[SystemModel], float] | None = None) -> BathScalingReport:
    """Estimate the J multiplier that makes the smallest bath mimic the largest.

    Runs ``observable`` (default: short unprotected memory) for each bath
    size, fits ``log10(1 - F)`` linearly in the size, measures the local
    exponent ``p = d log10(1-F) / d log10 J`` on the reference model, and
    reports ``10 ** ((fit(largest) - fit(reference)) / p)``.  The multiplier
    is reported, never applied.
    """
    sizes = tuple(int(s) for s in bath_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least two bath sizes")
    for s in sizes:
        if s < 1:
            raise ValueError(f"bath size must be >= 1, got {s}")
        if template.system_count + s > MAX_QUBITS:
            raise BudgetExceeded(f"{template.system_count} system + {s} bath qubits exceeds "
                                 f"the {MAX_QUBITS}-qubit budget")
    obs = observable or memory_observable()
    kind = template.geometry.kind

    def model_for(size: int, J: float) -> SystemModel:
        return SystemModel.build(kind, template.system_count, size, J, template.beta, 1.0)

    vals = tuple(float(obs(model_for(s, template.J))) for s in sizes)
    notes = []
    if min(vals) <= 0:
        raise ValueError("observable returned a non-positive infidelity; cannot fit a logarithm")
    y = np.log10(vals)
    slope, intercept = np.polyfit(np.asarray(sizes, dtype=float), y, 1)
    ref, tgt = sizes[0], sizes[-1]
    y_ref = slope * ref + intercept
    y_tgt = slope * tgt + intercept
    y_2j = math.log10(float(obs(model_for(ref, 2.0 * template.J))))
    p = (y_2j - math.log10(vals[0])) / math.log10(2.0)
    if not (math.isfinite(p) and p > 0):
        notes.append("non-positive J exponent; multiplier set to 1")
        mult = 1.0
    else:
        mult = 10.0 ** ((y_tgt - y_ref) / p)
    if abs(slope) < 1e-12:
        mult = 1.0
    return BathScalingReport(sizes, vals, float(slope), float(intercept), float(p), float(mult),
                             ref, tgt, False, tuple(notes))


def check_budget(model: SystemModel) -> None:
    if model.n_qubits > MAX_QUBITS:
        raise BudgetExceeded(f"{model.n_qubits} qubits exceeds the {MAX_QUBITS}-qubit budget")


def seq_of(*nodes) -> Seq:
    """Convenience for tests: a sequence node from existing nodes."""
    return Seq(tuple(nodes))
