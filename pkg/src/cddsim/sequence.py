"""Decoupling schedules: CDD recursion, PDD repetition and the two gate
strategies.

A schedule is a tree whose leaves are timed segments and whose inner nodes
list their children in time order (first child acts first).  Every node
carries an interned structural key, so identical sub-blocks (for example
the four level-``n`` blocks inside a level-``n+1`` block) share one key and
the engine computes their propagator once.

Generators are symbolic (:class:`Generator`); the engine renders them
against a :class:`~cddsim.model.SystemModel`.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence, Union

from .dfs import LogicalGate
from .errors import IndexOutOfRange, NegativeLevel, NegativeWidth, NonPositiveRepetitions, TooFewIntervals

DEFAULT_TAU0 = 1e-9
# time order of the base block: U, X, U, Z, U, X, U, Z
BASE_PULSES = ("x", "z", "x", "z")


@dataclass(frozen=True)
class Generator:
    """Symbolic Hamiltonian of one segment.

    ``exchange`` holds ``((i, j), coupling)`` terms of ``H_G`` (rad/s).
    A pulse generator has ``pulse_axis`` and the pulse width; its amplitude
    is ``pi / (2 width)`` so the pulse alone is a global Pauli.  ``bath``
    switches ``H_SB + H_B`` on (always on in physical schedules).
    """

    exchange: tuple[tuple[tuple[int, int], float], ...] = ()
    pulse_axis: str | None = None
    pulse_width: float = 0.0
    bath: bool = True

    @property
    def is_memory(self) -> bool:
        return not self.exchange and self.pulse_axis is None

    @property
    def pulse_amplitude(self) -> float:
        return math.pi / (2.0 * self.pulse_width) if self.pulse_axis else 0.0


MEMORY = Generator()


@dataclass(frozen=True)
class Segment:
    """One timed piece of a schedule.

    Intervals carry a generator (or, when several exchange ops are packed
    into one interval, consecutive ``parts``); finite pulses carry the pulse
    generator; ideal pulses carry only ``ideal_axis`` and zero duration.
    """

    kind: str
    duration: float
    generator: Generator | None = None
    ideal_axis: str | None = None
    parts: tuple[tuple[Generator, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("interval", "pulse"):
            raise ValueError(f"segment kind must be 'interval' or 'pulse', got {self.kind!r}")
        if not self.duration >= 0:
            raise NegativeWidth(f"segment duration must be >= 0, got {self.duration}")
        if self.ideal_axis is not None:
            if self.kind != "pulse" or self.duration != 0:
                raise ValueError("only zero-duration pulses can be ideal")
        elif self.duration == 0:
            raise ValueError("zero duration is reserved for ideal pulses")
        elif self.generator is None and not self.parts:
            raise ValueError("timed segment needs a generator or parts")

    @property
    def is_ideal(self) -> bool:
        return self.ideal_axis is not None

    @property
    def label(self) -> tuple:
        """Cache key: equal labels mean physically identical segments."""
        return (self.kind, self.duration, self.generator, self.ideal_axis, self.parts)

    def pieces(self) -> tuple[tuple[Generator, float], ...]:
        """Consecutive ``(generator, duration)`` pieces in time order."""
        if self.is_ideal:
            return ()
        return self.parts if self.parts else ((self.generator, self.duration),)


# --- structure tree --------------------------------------------------------------

_INTERN: dict = {}
_INTERN_LOCK = threading.Lock()


def _intern(key) -> int:
    with _INTERN_LOCK:
        val = _INTERN.get(key)
        if val is None:
            val = len(_INTERN)
            _INTERN[key] = val
        return val


@dataclass(frozen=True, eq=False)
class Leaf:
    segment: Segment
    key: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "key", _intern(("leaf", self.segment.label)))


@dataclass(frozen=True, eq=False)
class Seq:
    children: tuple
    key: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "key", _intern(("seq",) + tuple(c.key for c in self.children)))


Node = Union[Leaf, Seq]


def iter_segments(node: Node):
    """Segments of a tree in time order."""
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Leaf):
            yield cur.segment
        else:
            stack.extend(reversed(cur.children))


@dataclass(frozen=True)
class Schedule:
    """A compiled schedule with its recursive structure.

    ``op_locations[k]`` lists where exchange op ``k`` of the gate lives, as
    ``(interval ordinal, part index)`` pairs (part index -1 for a plain
    interval generator).
    """

    root: Node | None
    level: int
    tau0: float
    delta: float
    kind: str
    gate: str = "memory"
    op_locations: tuple = ()

    @cached_property
    def segments(self) -> tuple[Segment, ...]:
        return tuple(iter_segments(self.root)) if self.root is not None else ()

    @cached_property
    def intervals(self) -> tuple[Segment, ...]:
        return tuple(s for s in self.segments if s.kind == "interval")

    @property
    def interval_count(self) -> int:
        return len(self.intervals)

    @property
    def pulse_count(self) -> int:
        return sum(1 for s in self.segments if s.kind == "pulse")

    @property
    def total_time(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    @property
    def interval_time(self) -> float:
        return math.fsum(s.duration for s in self.intervals)

    def op_angle(self, k: int) -> float:
        """Accumulated exchange angle of op ``k``: sum of coupling x duration."""
        total = []
        for ordinal, part in self.op_locations[k]:
            seg = self.intervals[ordinal]
            gen, dur = seg.pieces()[part] if part >= 0 else (seg.generator, seg.duration)
            total.extend(w * dur for _, w in gen.exchange)
        return math.fsum(total)


# --- builders ---------------------------------------------------------------------

def _pulse_leaf(axis: str, delta: float) -> Leaf:
    if not delta >= 0:
        raise NegativeWidth(f"pulse width must be >= 0, got {delta}")
    if delta == 0:
        return Leaf(Segment("pulse", 0.0, ideal_axis=axis))
    gen = Generator(pulse_axis=axis, pulse_width=float(delta))
    return Leaf(Segment("pulse", float(delta), generator=gen))


def _cdd_tree(leaves: Sequence[Leaf], start: int, level: int, pulses: dict) -> Node:
    if level == 0:
        return leaves[start]
    q = 4 ** (level - 1)
    children = []
    for k, axis in enumerate(BASE_PULSES):
        children.append(_cdd_tree(leaves, start + k * q, level - 1, pulses))
        children.append(pulses[axis])
    return Seq(tuple(children))


IntervalSpec = Union[Generator, Segment, Sequence, Callable[[int], Union[Generator, Segment]]]


def _interval_leaves(spec: IntervalSpec, count: int, tau0: float) -> list[Leaf]:
    def as_segment(item) -> Segment:
        if isinstance(item, Segment):
            return item
        return Segment("interval", float(tau0), generator=item)

    if isinstance(spec, (Generator, Segment)):
        leaf = Leaf(as_segment(spec))
        return [leaf] * count
    if callable(spec):
        items = [spec(k) for k in range(count)]
    else:
        items = list(spec)
        if len(items) != count:
            raise ValueError(f"expected {count} interval generators, got {len(items)}")
    cache: dict = {}
    out = []
    for item in items:
        seg = as_segment(item)
        leaf = cache.get(seg.label)
        if leaf is None:
            leaf = cache[seg.label] = Leaf(seg)
        out.append(leaf)
    return out


def cdd_schedule(n: int, interval_generator: IntervalSpec = MEMORY, delta: float = 0.0,
                 tau0: float = DEFAULT_TAU0, *, kind: str = "cdd", gate: str = "memory",
                 op_locations: tuple = ()) -> Schedule:
    """Level-``n`` concatenated sequence over ``4**n`` intervals of ``tau0``.

    ``interval_generator`` is one generator for every interval, a list of
    ``4**n`` generators/segments in time order, or a function of the
    interval ordinal.  Pulses of width ``delta`` (ideal if 0) are applied
    literally, including back-to-back pulses at block boundaries.
    """
    if n < 0:
        raise NegativeLevel(f"concatenation level must be >= 0, got {n}")
    if not tau0 > 0:
        raise ValueError(f"tau0 must be positive, got {tau0}")
    pulses = {a: _pulse_leaf(a, delta) for a in ("x", "z")}
    leaves = _interval_leaves(interval_generator, 4 ** n, tau0)
    root = _cdd_tree(leaves, 0, n, pulses)
    return Schedule(root, n, float(tau0), float(delta), kind, gate, op_locations)


def pdd_schedule(k: int, interval_generator: IntervalSpec = MEMORY, delta: float = 0.0,
                 tau0: float = DEFAULT_TAU0) -> Schedule:
    """``k`` back-to-back copies of the level-1 block."""
    if k < 1:
        raise NonPositiveRepetitions(f"repetitions must be >= 1, got {k}")
    pulses = {a: _pulse_leaf(a, delta) for a in ("x", "z")}
    leaves = _interval_leaves(interval_generator, 4 * k, tau0)
    blocks = [_cdd_tree(leaves, 4 * r, 1, pulses) for r in range(k)]
    root = blocks[0] if k == 1 else Seq(tuple(blocks))
    return Schedule(root, 1, float(tau0), float(delta), "pdd")


def allocate_intervals(weights: Sequence[float], total: int) -> list[int]:
    """Split ``total`` intervals over ops in proportion to ``weights``.

    Every op gets at least one interval; the rest are shared by the
    largest-remainder rule (ties go to the earlier op).
    """
    m = len(weights)
    if m == 0:
        return []
    if total < m:
        raise TooFewIntervals(f"{total} intervals cannot host {m} ops without packing")
    w = [abs(float(x)) for x in weights]
    s = math.fsum(w)
    if s == 0:
        w, s = [1.0] * m, float(m)
    quotas = [total * x / s for x in w]
    counts = [max(1, int(math.floor(q))) for q in quotas]
    while sum(counts) > total:
        # shed from the op furthest above its quota
        k = max(range(m), key=lambda i: (counts[i] - quotas[i] if counts[i] > 1 else -math.inf, -i))
        counts[k] -= 1
    rem = total - sum(counts)
    order = sorted(range(m), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:rem]:
        counts[i] += 1
    return counts


def _op_generator(op, coupling: float) -> Generator:
    return Generator(exchange=((op.pair, coupling),))


def _packed_parts(ops, indices, duration: float) -> tuple[tuple[Generator, float], ...]:
    """Consecutive parts for ops sharing one interval, durations in
    proportion to ``|angle|`` and equal coupling magnitudes."""
    weights = [abs(ops[k].angle) for k in indices]
    s = math.fsum(weights)
    parts = []
    for k, w in zip(indices, weights):
        if w == 0:
            continue
        d = duration * w / s
        parts.append((_op_generator(ops[k], ops[k].angle / d), d))
    return tuple(parts)


def _check_gate(gate: LogicalGate, model) -> None:
    if model is None:
        return
    if gate.system_count > model.system_count:
        raise IndexOutOfRange(f"gate {gate.name} needs {gate.system_count} system qubits, "
                              f"model has {model.system_count}")
    for op in gate.ops:
        if max(op.pair) >= model.system_count:
            raise IndexOutOfRange(f"exchange pair {op.pair} outside system range")


def _packed_intervals(gate: LogicalGate, count: int, duration: float):
    """Group consecutive ops into ``count`` intervals by cumulative-angle midpoint."""
    ops = gate.ops
    w = [abs(op.angle) for op in ops]
    s = math.fsum(w)
    groups: list[list[int]] = [[] for _ in range(count)]
    acc = 0.0
    for k, x in enumerate(w):
        mid = (acc + x / 2) / s if s > 0 else (k + 0.5) / len(ops)
        groups[min(count - 1, int(mid * count))].append(k)
        acc += x
    items, locations = [], [[] for _ in ops]
    for ordinal, grp in enumerate(groups):
        parts = _packed_parts(ops, grp, duration)
        if not parts:
            items.append(Segment("interval", duration, generator=MEMORY))
            continue
        if len(parts) == 1:
            k = next(k for k in grp if ops[k].angle != 0)
            items.append(Segment("interval", duration, generator=parts[0][0]))
            locations[k].append((ordinal, -1))
            continue
        items.append(Segment("interval", duration, parts=parts))
        p = 0
        for k in grp:
            if ops[k].angle != 0:
                locations[k].append((ordinal, p))
                p += 1
    return items, tuple(tuple(x) for x in locations)


def decouple_while_compute(gate: LogicalGate, n: int, tau0: float = DEFAULT_TAU0,
                           delta: float = 0.0, model=None, pack: bool = False) -> Schedule:
    """Spread the gate over the ``4**n`` intervals of a level-``n`` sequence.

    Each op gets a contiguous run of intervals (largest-remainder allocation
    by ``|angle|``) and its coupling is scaled so the accumulated angle is
    exact.  With fewer intervals than ops, ``pack=True`` places consecutive
    ops inside single intervals; otherwise :class:`TooFewIntervals` is raised.
    """
    if n < 0:
        raise NegativeLevel(f"concatenation level must be >= 0, got {n}")
    _check_gate(gate, model)
    total = 4 ** n
    ops = gate.ops
    if not ops:
        return cdd_schedule(n, MEMORY, delta, tau0, kind="while", gate=gate.name)
    if total < len(ops):
        if not pack:
            raise TooFewIntervals(f"level {n} has {total} intervals for {len(ops)} ops; "
                                  f"raise n or enable packing")
        items, locations = _packed_intervals(gate, total, tau0)
        return cdd_schedule(n, items, delta, tau0, kind="while", gate=gate.name,
                            op_locations=locations)
    counts = allocate_intervals([op.angle for op in ops], total)
    items, locations, ordinal = [], [], 0
    for op, c in zip(ops, counts):
        gen = _op_generator(op, op.angle / (c * tau0))
        items += [gen] * c
        locations.append(tuple((ordinal + r, -1) for r in range(c)))
        ordinal += c
    return cdd_schedule(n, items, delta, tau0, kind="while", gate=gate.name,
                        op_locations=tuple(locations))


def decouple_then_compute(gate: LogicalGate, n: int, tau0: float = DEFAULT_TAU0,
                          delta: float = 0.0, model=None) -> Schedule:
    """Level-``n`` memory sequence, then one ``tau0`` interval per op."""
    if n < 0:
        raise NegativeLevel(f"concatenation level must be >= 0, got {n}")
    _check_gate(gate, model)
    memory = cdd_schedule(n, MEMORY, delta, tau0)
    if not gate.ops:
        return Schedule(memory.root, n, float(tau0), float(delta), "then", gate.name)
    tail = [Leaf(Segment("interval", float(tau0), generator=_op_generator(op, op.angle / tau0)))
            for op in gate.ops]
    base = 4 ** n
    locations = tuple(((base + k, -1),) for k in range(len(gate.ops)))
    root = Seq((memory.root,) + tuple(tail))
    return Schedule(root, n, float(tau0), float(delta), "then", gate.name, locations)


def free_evolution_schedule(gate: LogicalGate, T: float, model=None) -> Schedule:
    """One unprotected interval of length ``T`` carrying the whole gate.

    A multi-op gate runs its ops back to back inside the interval, each for
    a share of ``T`` proportional to ``|angle|`` (equal coupling magnitudes).
    """
    if not T > 0:
        raise ValueError(f"free evolution time must be positive, got {T}")
    _check_gate(gate, model)
    ops = gate.ops
    if not ops:
        seg, locations = Segment("interval", float(T), generator=MEMORY), ()
    elif len(ops) == 1:
        seg = Segment("interval", float(T), generator=_op_generator(ops[0], ops[0].angle / T))
        locations = (((0, -1),),)
    else:
        items, locations = _packed_intervals(gate, 1, float(T))
        seg = items[0]
    return Schedule(Leaf(seg), 0, float(T), 0.0, "free", gate.name, locations)
