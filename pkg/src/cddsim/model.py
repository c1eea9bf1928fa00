"""Physical model: qubit geometries and the Hamiltonian pieces.

Qubits are ordered system first, bath after (the bath occupies the trailing
tensor slots), and indexed from 0.  Hamiltonians are assembled as
:class:`~cddsim.core.pauli.PauliSum` objects and rendered to dense
matrices on request, so the engine can choose its frame and block layout.

Coupling constants are angular frequencies in rad/s with hbar = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .core.pauli import PauliString, PauliSum
from .errors import IndexOutOfRange, NegativeWidth, UnsupportedCount

GEOMETRIES = ("linear", "circular", "polygonal")
SYSTEM_COUNTS = (4, 8)
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class Geometry:
    """Qubit positions in the plane (dimensionless units)."""

    kind: str
    system_count: int
    bath_count: int
    positions: tuple[tuple[float, float], ...]

    @property
    def n_qubits(self) -> int:
        return self.system_count + self.bath_count

    @property
    def system_qubits(self) -> range:
        return range(self.system_count)

    @property
    def bath_qubits(self) -> range:
        return range(self.system_count, self.n_qubits)

    def distance(self, i: int, j: int) -> float:
        (xi, yi), (xj, yj) = self.positions[i], self.positions[j]
        return math.hypot(xi - xj, yi - yj)

    def distances(self) -> np.ndarray:
        p = np.asarray(self.positions, dtype=float)
        return np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1))


def build_geometry(kind: str, system_count: int, bath_count: int) -> Geometry:
    """Deterministic layouts.

    * ``linear``: every qubit on a line at unit spacing, system block first.
    * ``circular``: all qubits equally spaced on a circle with unit chord
      between neighbours.
    * ``polygonal``: system qubits on a unit-spacing line; bath qubits on a
      regular polygon of unit side centred one unit above the line's
      midpoint (one bath qubit sits at that centre, two form a unit segment).
    """
    if system_count not in SYSTEM_COUNTS:
        raise UnsupportedCount(f"system_count must be 4 or 8, got {system_count}")
    if bath_count < 0:
        raise UnsupportedCount(f"bath_count must be >= 0, got {bath_count}")
    n = system_count + bath_count
    if kind == "linear":
        pos = [(float(k), 0.0) for k in range(n)]
    elif kind == "circular":
        radius = 0.5 / math.sin(math.pi / n)
        pos = [(radius * math.cos(2 * math.pi * k / n), radius * math.sin(2 * math.pi * k / n))
               for k in range(n)]
    elif kind == "polygonal":
        pos = [(float(k), 0.0) for k in range(system_count)]
        cx, cy = (system_count - 1) / 2.0, 1.0
        m = bath_count
        if m == 1:
            pos.append((cx, cy))
        elif m == 2:
            pos += [(cx - 0.5, cy), (cx + 0.5, cy)]
        elif m > 2:
            radius = 0.5 / math.sin(math.pi / m)
            for k in range(m):
                ang = math.pi / 2 + 2 * math.pi * k / m
                pos.append((cx + radius * math.cos(ang), cy + radius * math.sin(ang)))
    else:
        raise ValueError(f"unknown geometry {kind!r}; expected one of {GEOMETRIES}")
    geo = Geometry(kind, system_count, bath_count, tuple(pos))
    d = geo.distances()
    off = d[~np.eye(n, dtype=bool)]
    if off.size and off.min() <= 1e-9:
        raise ValueError(f"{kind} layout places two qubits at the same point")
    return geo


# --- Hamiltonian terms ----------------------------------------------------------

def h_sb_terms(geometry: Geometry, J: float) -> PauliSum:
    """``sum_a sum_j s_j^a (x) J sum_i s_i^a / 2**d_ij`` (1-local on the system)."""
    n = geometry.n_qubits
    terms = []
    if J != 0:
        for j in geometry.system_qubits:
            for i in geometry.bath_qubits:
                w = J / 2.0 ** geometry.distance(i, j)
                for a in AXES:
                    terms.append((w, {j: a, i: a}))
    return PauliSum.from_terms(n, terms)


def h_b_terms(geometry: Geometry, beta: float) -> PauliSum:
    """Dipolar bath coupling ``beta sum_{i<j} (YY + ZZ - 2 XX) / d_ij**3``."""
    n = geometry.n_qubits
    terms = []
    bath = list(geometry.bath_qubits)
    if beta != 0:
        for a, i in enumerate(bath):
            for j in bath[a + 1:]:
                w = beta / geometry.distance(i, j) ** 3
                terms += [(w, {i: "y", j: "y"}), (w, {i: "z", j: "z"}), (-2.0 * w, {i: "x", j: "x"})]
    return PauliSum.from_terms(n, terms)


def exchange_terms(pairs_with_weights: Iterable[tuple[tuple[int, int], float]],
                   system_count: int, n_qubits: int) -> PauliSum:
    """``sum w (s_i . s_j)`` over system pairs."""
    terms = []
    for (i, j), w in pairs_with_weights:
        for q in (i, j):
            if not 0 <= q < system_count:
                raise IndexOutOfRange(f"qubit {q} outside system range 0..{system_count - 1}")
        if i == j:
            raise IndexOutOfRange(f"exchange pair needs distinct qubits, got ({i}, {j})")
        for a in AXES:
            terms.append((w, {i: a, j: a}))
    return PauliSum.from_terms(n_qubits, terms)


def pulse_terms(axis: str, system_count: int, n_qubits: int) -> PauliSum:
    """``sum_{j in system} s_j^axis`` (unit amplitude)."""
    return PauliSum.from_terms(n_qubits, [(1.0, {j: axis}) for j in range(system_count)])


# --- dense builders -------------------------------------------------------------

def build_h_sb(geometry: Geometry, J: float) -> np.ndarray:
    return h_sb_terms(geometry, J).dense()


def build_h_b(geometry: Geometry, beta: float) -> np.ndarray:
    return h_b_terms(geometry, beta).dense()


def build_exchange_generator(pairs_with_weights: Sequence[tuple[tuple[int, int], float]],
                             system_count: int = 4, bath_count: int = 0) -> np.ndarray:
    """Dense ``H_G`` on the full system (x) bath space (identity on the bath)."""
    n = system_count + bath_count
    return exchange_terms(pairs_with_weights, system_count, n).dense()


@dataclass(frozen=True)
class PulseDescriptor:
    """A global pulse about ``axis`` on every system qubit.

    Zero width carries the ideal Pauli string; positive width carries the
    generator ``omega * sum_j s_j^axis`` with ``omega = pi / (2 width)``.
    """

    axis: str
    width: float
    system_count: int
    bath_count: int = 0

    @property
    def ideal(self) -> bool:
        return self.width == 0

    @property
    def amplitude(self) -> float:
        return math.pi / (2.0 * self.width) if self.width > 0 else math.inf

    @property
    def pauli(self) -> PauliString:
        n = self.system_count + self.bath_count
        return PauliString.from_map(n, {j: self.axis for j in range(self.system_count)})

    def unitary(self) -> np.ndarray:
        if not self.ideal:
            raise ValueError("finite-width pulse has no standalone ideal unitary; use generator()")
        return self.pauli.dense()

    def generator(self) -> np.ndarray:
        if self.ideal:
            raise ValueError("ideal pulse has no generator")
        n = self.system_count + self.bath_count
        return pulse_terms(self.axis, self.system_count, n).scaled(self.amplitude).dense()


def build_pulse(axis: str, width: float, system_count: int, bath_count: int = 0) -> PulseDescriptor:
    if axis not in ("x", "y", "z"):
        raise ValueError(f"pulse axis must be x, y or z, got {axis!r}")
    if not width >= 0:
        raise NegativeWidth(f"pulse width must be >= 0, got {width}")
    return PulseDescriptor(axis, float(width), system_count, bath_count)


# --- the assembled model --------------------------------------------------------

@dataclass(frozen=True)
class SystemModel:
    """Geometry plus coupling strengths.

    ``bath_scaling`` multiplies ``J`` in ``H_SB`` (an opt-in correction for
    small simulated baths).  Dense operators are rendered lazily.
    """

    geometry: Geometry
    J: float
    beta: float
    bath_scaling: float = 1.0
    _dense: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @classmethod
    def build(cls, kind: str = "linear", system_count: int = 4, bath_count: int = 2,
              J: float = 1e4, beta: float = 1e6, bath_scaling: float = 1.0) -> "SystemModel":
        return cls(build_geometry(kind, system_count, bath_count), float(J), float(beta),
                   float(bath_scaling))

    @property
    def system_count(self) -> int:
        return self.geometry.system_count

    @property
    def bath_count(self) -> int:
        return self.geometry.bath_count

    @property
    def n_qubits(self) -> int:
        return self.geometry.n_qubits

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    @property
    def blocks(self) -> int:
        return self.system_count // 4

    @property
    def J_effective(self) -> float:
        return self.J * self.bath_scaling

    @cached_property
    def sb_terms(self) -> PauliSum:
        return h_sb_terms(self.geometry, self.J_effective)

    @cached_property
    def b_terms(self) -> PauliSum:
        return h_b_terms(self.geometry, self.beta)

    @property
    def h_sb(self) -> np.ndarray:
        if "sb" not in self._dense:
            self._dense["sb"] = self.sb_terms.dense()
        return self._dense["sb"]

    @property
    def h_b(self) -> np.ndarray:
        if "b" not in self._dense:
            self._dense["b"] = self.b_terms.dense()
        return self._dense["b"]

    def exchange_terms(self, pairs_with_weights) -> PauliSum:
        return exchange_terms(pairs_with_weights, self.system_count, self.n_qubits)

    def pulse_terms(self, axis: str) -> PauliSum:
        return pulse_terms(axis, self.system_count, self.n_qubits)

    def pulse(self, axis: str, width: float) -> PulseDescriptor:
        return build_pulse(axis, width, self.system_count, self.bath_count)

    def with_couplings(self, J: float | None = None, beta: float | None = None,
                       bath_scaling: float | None = None) -> "SystemModel":
        return SystemModel(self.geometry,
                           self.J if J is None else float(J),
                           self.beta if beta is None else float(beta),
                           self.bath_scaling if bath_scaling is None else float(bath_scaling))

    def fingerprint(self) -> tuple:
        """Hashable identity of everything that determines the Hamiltonians."""
        return (self.geometry.kind, self.system_count, self.bath_count,
                self.J, self.beta, self.bath_scaling)
