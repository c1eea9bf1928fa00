"""Pauli matrices, Pauli strings and sums of Pauli strings.

Qubit 0 is the most significant bit of a basis index, so ``kron(a, b)``
puts ``a`` on qubit 0.  A Pauli string with X-mask ``x`` and Z-mask ``z``
maps ``|c>`` to ``i**ny * (-1)**popcount(c & z) |c ^ x>`` (using Y = iXZ),
which lets us build and apply strings without any matrix products.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"i": I2, "x": X, "y": Y, "z": Z}

# conjugation by a Hadamard on every qubit: X <-> Z, Y -> -Y
_XFRAME = {"x": ("z", 1.0), "y": ("y", -1.0), "z": ("x", 1.0)}

_POPCOUNT_CACHE: dict[int, np.ndarray] = {}


def _popcount_parity(n_qubits: int) -> np.ndarray:
    """Parity of popcount(i) for i in range(2**n_qubits), as 0/1 ints."""
    arr = _POPCOUNT_CACHE.get(n_qubits)
    if arr is None:
        idx = np.arange(2 ** n_qubits, dtype=np.int64)
        par = np.zeros_like(idx)
        for b in range(n_qubits):
            par ^= (idx >> b) & 1
        arr = par
        _POPCOUNT_CACHE[n_qubits] = arr
    return arr


def popcount(values: np.ndarray, n_bits: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(values)
    for b in range(n_bits):
        out += (values >> b) & 1
    return out


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis on ``n_qubits`` qubits."""

    n_qubits: int
    ops: tuple[tuple[int, str], ...]

    @classmethod
    def from_map(cls, n_qubits: int, ops: Mapping[int, str]) -> "PauliString":
        items = []
        for q, a in sorted(ops.items()):
            a = a.lower()
            if a not in "xyz":
                if a == "i":
                    continue
                raise ValueError(f"unknown Pauli axis {a!r}")
            if not 0 <= q < n_qubits:
                raise IndexError(f"qubit {q} outside 0..{n_qubits - 1}")
            items.append((q, a))
        return cls(n_qubits, tuple(items))

    def _bit(self, q: int) -> int:
        return 1 << (self.n_qubits - 1 - q)

    @property
    def masks(self) -> tuple[int, int, int]:
        """(x_mask, z_mask, number of Y factors)."""
        xm = zm = ny = 0
        for q, a in self.ops:
            b = self._bit(q)
            if a in "xy":
                xm |= b
            if a in "yz":
                zm |= b
            if a == "y":
                ny += 1
        return xm, zm, ny

    def in_xframe(self) -> tuple[float, "PauliString"]:
        sign = 1.0
        ops = []
        for q, a in self.ops:
            b, s = _XFRAME[a]
            sign *= s
            ops.append((q, b))
        return sign, PauliString(self.n_qubits, tuple(ops))

    def permutation(self) -> tuple[np.ndarray, np.ndarray]:
        """Columns map ``c -> rows[c]`` with amplitude ``phases[c]``."""
        xm, zm, ny = self.masks
        d = 2 ** self.n_qubits
        cols = np.arange(d, dtype=np.int64)
        par = _popcount_parity(self.n_qubits)[cols & zm]
        phases = (1j ** ny) * (1.0 - 2.0 * par)
        return cols ^ xm, phases.astype(complex)

    def dense(self) -> np.ndarray:
        d = 2 ** self.n_qubits
        rows, phases = self.permutation()
        out = np.zeros((d, d), dtype=complex)
        out[rows, np.arange(d)] = phases
        return out

    def apply_left(self, a):
        """Return ``P @ a`` using a row permutation and sign flips."""
        rows, phases = self.permutation()
        # (P a)[rows[c], :] = phases[c] * a[c, :]
        inv = np.empty_like(rows)
        inv[rows] = np.arange(rows.size)
        ph = phases[inv]
        return a[inv] * (ph[:, None] if a.ndim == 2 else ph)

    def apply_right(self, a):
        """Return ``a @ P``."""
        rows, phases = self.permutation()
        # (a P)[:, c] = a[:, rows[c]] * phases[c]
        return a[:, rows] * phases[None, :]


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Pauli strings, kept symbolic until rendered."""

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...] = ()

    @classmethod
    def from_terms(cls, n_qubits: int,
                   terms: Iterable[tuple[float, Mapping[int, str]]]) -> "PauliSum":
        out = []
        for c, ops in terms:
            if c == 0:
                continue
            out.append((c, PauliString.from_map(n_qubits, ops)))
        return cls(n_qubits, tuple(out))

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return PauliSum(self.n_qubits, self.terms + other.terms)

    def scaled(self, factor: float) -> "PauliSum":
        if factor == 0:
            return PauliSum(self.n_qubits)
        return PauliSum(self.n_qubits, tuple((c * factor, p) for c, p in self.terms))

    def in_xframe(self) -> "PauliSum":
        out = []
        for c, p in self.terms:
            s, q = p.in_xframe()
            out.append((c * s, q))
        return PauliSum(self.n_qubits, tuple(out))

    def dense(self, frame: str = "z") -> np.ndarray:
        """Render to a dense matrix; ``frame='x'`` returns ``W H W`` with
        ``W`` the Hadamard on every qubit."""
        src = self.in_xframe() if frame == "x" else self
        d = 2 ** self.n_qubits
        out = np.zeros((d, d), dtype=complex)
        cols = np.arange(d)
        for c, p in src.terms:
            rows, phases = p.permutation()
            # rows is a permutation, so no index repeats within one term
            out[rows, cols] += c * phases
        return out


def embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Single-qubit operator ``op`` acting on ``qubit`` of ``n_qubits``."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n_qubits):
        out = np.kron(out, op if q == qubit else I2)
    return out


def hadamard_all(n_qubits: int) -> np.ndarray:
    """Dense ``H^{(x)n}``; real and symmetric."""
    idx = np.arange(2 ** n_qubits, dtype=np.int64)
    par = _popcount_parity(n_qubits)[idx[:, None] & idx[None, :]]
    return (1.0 - 2.0 * par) / np.sqrt(2.0 ** n_qubits)


def popcount_groups(n_qubits: int) -> list[np.ndarray]:
    """Basis indices grouped by Hamming weight (ascending weight)."""
    idx = np.arange(2 ** n_qubits, dtype=np.int64)
    w = popcount(idx, n_qubits)
    return [idx[w == k] for k in range(n_qubits + 1)]


def dense_blocks(psum: PauliSum, groups: list[np.ndarray], frame: str = "z"):
    """Render ``psum`` directly as diagonal blocks over ``groups``.

    Returns one dense matrix per group, or ``None`` if the summed operator
    couples two different groups.  Single terms may cross groups as long as
    their crossing parts cancel in the sum (``XX + YY`` in a popcount layout).
    """
    src = psum.in_xframe() if frame == "x" else psum
    d = 2 ** psum.n_qubits
    label = np.empty(d, dtype=np.int64)
    pos = np.empty(d, dtype=np.int64)
    for b, g in enumerate(groups):
        label[g] = b
        pos[g] = np.arange(g.size)
    out = [np.zeros((g.size, g.size), dtype=complex) for g in groups]
    cross_idx, cross_val = [], []
    scale = 0.0
    cols = np.arange(d)
    for c, p in src.terms:
        rows, phases = p.permutation()
        vals = c * phases
        scale += abs(c)
        inside = label[rows] == label
        if not inside.all():
            cross_idx.append(rows[~inside] * d + cols[~inside])
            cross_val.append(vals[~inside])
        for b, g in enumerate(groups):
            keep = g[inside[g]]
            out[b][pos[rows[keep]], pos[keep]] += vals[keep]
    if cross_idx:
        idx = np.concatenate(cross_idx)
        val = np.concatenate(cross_val)
        _, inv = np.unique(idx, return_inverse=True)
        re = np.bincount(inv, weights=val.real)
        im = np.bincount(inv, weights=val.imag)
        if np.max(np.hypot(re, im)) > 1e-12 * max(scale, 1.0):
            return None
    return out
