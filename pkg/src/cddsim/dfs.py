"""Four-qubit decoherence-free-subspace code and exchange-only gates.

Basis convention: spin up is bit 0, qubit 0 is the most significant bit.
Exchange pairs are 0-based qubit indices; block A holds qubits 0-3 and
block B qubits 4-7.  An exchange op with angle ``phi`` on pair ``(i, j)``
is the evolution ``exp(-i phi s_i . s_j)``.
"""
from __future__ import annotations

import itertools
import math
import os
from importlib import resources
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .core.pauli import PauliString
from .errors import (DimensionMismatch, IndexOutOfRange, NotNormalized,
                     SequenceFileInvalid, SynthesisFailed)

GATE_NAMES = ("memory", "hadamard", "pi8", "cphase")
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
PI8 = np.diag([1.0, np.exp(1j * math.pi / 4)])
CPHASE = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

# single-block synthesis alternates these two pairs
SINGLE_PAIRS = ((0, 1), (1, 2))
CPHASE_LENGTH = 60
CPHASE_SEED = 1
# output of synthesize_cphase(CPHASE_LENGTH, CPHASE_SEED), frozen because the
# search is sensitive to last-bit rounding and so to the BLAS build
BUILTIN_CPHASE = "cphase_L60_seed1.seq"


@dataclass(frozen=True)
class ExchangeOp:
    """Heisenberg exchange ``exp(-i angle s_i . s_j)`` on a 0-based pair."""

    pair: tuple[int, int]
    angle: float

    def __post_init__(self):
        i, j = self.pair
        if i == j:
            raise IndexOutOfRange(f"exchange pair needs distinct qubits, got {self.pair}")
        if min(i, j) < 0:
            raise IndexOutOfRange(f"negative qubit index in {self.pair}")
        object.__setattr__(self, "pair", (int(i), int(j)))
        object.__setattr__(self, "angle", float(self.angle))


@dataclass(frozen=True)
class LogicalBasis:
    zero_L: np.ndarray
    one_L: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.stack([self.zero_L, self.one_L], axis=1)


@dataclass(frozen=True)
class LogicalGate:
    """An encoded gate: exchange ops (applied in list order) and its target."""

    name: str
    ops: tuple[ExchangeOp, ...]
    target: np.ndarray = field(compare=False)
    blocks: int = 1
    source: str = "builtin"

    @property
    def n_ops(self) -> int:
        return len(self.ops)

    @property
    def system_count(self) -> int:
        return 4 * self.blocks

    def on_blocks(self, blocks: int) -> "LogicalGate":
        """Same gate acting on block A of a wider register (identity elsewhere)."""
        if blocks == self.blocks:
            return self
        if blocks < self.blocks:
            raise ValueError(f"{self.name} needs {self.blocks} blocks")
        target = np.kron(self.target, np.eye(2 ** (blocks - self.blocks)))
        return LogicalGate(self.name, self.ops, target, blocks, self.source)


# --- code states --------------------------------------------------------------

def _ket(bits: str) -> int:
    # '0' = up, '1' = down; leftmost character is qubit 0
    return int(bits, 2)


@lru_cache(maxsize=None)
def _basis_arrays() -> tuple[np.ndarray, np.ndarray]:
    zero = np.zeros(16, dtype=complex)
    for bits, a in (("0101", 1), ("1010", 1), ("0110", -1), ("1001", -1)):
        zero[_ket(bits)] = a / 2.0
    one = np.zeros(16, dtype=complex)
    amps = (("0011", 2), ("1100", 2), ("0110", -1), ("1001", -1), ("0101", -1), ("1010", -1))
    for bits, a in amps:
        one[_ket(bits)] = a / (2.0 * math.sqrt(3.0))
    zero.setflags(write=False)
    one.setflags(write=False)
    return zero, one


def logical_basis() -> LogicalBasis:
    """The two total-spin-zero code states of one block (16-dim each)."""
    z, o = _basis_arrays()
    return LogicalBasis(z.copy(), o.copy())


@lru_cache(maxsize=None)
def _code_matrix(blocks: int) -> np.ndarray:
    z, o = _basis_arrays()
    single = np.stack([z, o], axis=1)
    out = single
    for _ in range(blocks - 1):
        out = np.kron(out, single)
    out.setflags(write=False)
    return out


def code_basis(blocks: int = 1) -> np.ndarray:
    """Columns are the logical basis states (``|a b>`` with block A slow)."""
    if blocks not in (1, 2):
        raise ValueError(f"blocks must be 1 or 2, got {blocks}")
    return _code_matrix(blocks).copy()


def logical_state(amplitudes, blocks: int = 1) -> np.ndarray:
    """Embed a logical vector (length ``2**blocks``) into the code space."""
    amp = np.asarray(amplitudes, dtype=complex).ravel()
    if amp.size != 2 ** blocks:
        raise DimensionMismatch(f"expected {2 ** blocks} logical amplitudes, got {amp.size}")
    return _code_matrix(blocks) @ amp


def logical_amplitudes(amplitudes, blocks: int = 1) -> np.ndarray:
    """Product logical vector from per-block pairs, checking normalisation."""
    pairs = _as_pairs(amplitudes, blocks)
    vec = np.ones(1, dtype=complex)
    for a, b in pairs:
        nrm = abs(a) ** 2 + abs(b) ** 2
        if abs(nrm - 1.0) > 1e-12:
            raise NotNormalized(f"|a|^2 + |b|^2 = {nrm!r} for block amplitudes ({a}, {b})")
        vec = np.kron(vec, np.array([a, b], dtype=complex))
    return vec


def _as_pairs(amplitudes, blocks: int):
    arr = np.asarray(amplitudes, dtype=complex)
    if arr.shape == (2,) and blocks == 1:
        return [tuple(arr)]
    if arr.shape == (blocks, 2):
        return [tuple(r) for r in arr]
    raise DimensionMismatch(f"expected {blocks} (a, b) pairs, got shape {arr.shape}")


def encode(amplitudes=(0.0, 1.0), blocks: int = 1, bath_count: int = 0) -> np.ndarray:
    """Code state of ``amplitudes`` tensored with the uniform bath superposition."""
    sys_state = logical_state(logical_amplitudes(amplitudes, blocks), blocks)
    db = 2 ** bath_count
    bath = np.full(db, 1.0 / math.sqrt(db), dtype=complex)
    return np.kron(sys_state, bath)


def global_pulse_operator(axis: str, blocks: int = 1, bath_count: int = 0) -> np.ndarray:
    """``s^axis`` on every system qubit, identity on the bath."""
    ns = 4 * blocks
    return PauliString.from_map(ns + bath_count, {j: axis for j in range(ns)}).dense()


def project_logical(u: np.ndarray, blocks: int = 1) -> tuple[np.ndarray, float]:
    """Logical matrix of a system operator and its worst-case leakage."""
    b = _code_matrix(blocks)
    if u.shape != (b.shape[0], b.shape[0]):
        raise DimensionMismatch(f"operator shape {u.shape} does not match {blocks} block(s)")
    ub = u @ b
    m = b.conj().T @ ub
    out = ub - b @ m
    leak = float(np.sqrt((np.abs(out) ** 2).sum(axis=0)).max())
    return m, leak


def phase_stripped_distance(u: np.ndarray, v: np.ndarray) -> float:
    """``max|u - e^{i g} v|`` with the phase ``g`` aligning ``tr(v^H u)``."""
    t = np.vdot(v, u)
    ph = t / abs(t) if abs(t) > 0 else 1.0
    return float(np.abs(u - ph * v).max())


# --- exchange evolution ---------------------------------------------------------

@lru_cache(maxsize=None)
def _swap_permutation(i: int, j: int, n_qubits: int) -> np.ndarray:
    idx = np.arange(2 ** n_qubits, dtype=np.int64)
    bi = (idx >> (n_qubits - 1 - i)) & 1
    bj = (idx >> (n_qubits - 1 - j)) & 1
    flip = (1 << (n_qubits - 1 - i)) | (1 << (n_qubits - 1 - j))
    perm = np.where(bi != bj, idx ^ flip, idx)
    perm.setflags(write=False)
    return perm


def exchange_unitary(pair: tuple[int, int], angle: float, n_qubits: int) -> np.ndarray:
    """``exp(-i angle s_i . s_j) = e^{i angle}(cos 2angle - i sin 2angle SWAP)``."""
    i, j = pair
    d = 2 ** n_qubits
    perm = _swap_permutation(i, j, n_qubits)
    u = np.zeros((d, d), dtype=complex)
    ph = np.exp(1j * angle)
    u[np.arange(d), np.arange(d)] = ph * math.cos(2 * angle)
    u[perm, np.arange(d)] += -1j * ph * math.sin(2 * angle)
    return u


def apply_ops(ops: Sequence[ExchangeOp], n_qubits: int, state: np.ndarray | None = None) -> np.ndarray:
    """Product of exchange unitaries (first op acts first), or its action on ``state``."""
    d = 2 ** n_qubits
    out = np.eye(d, dtype=complex) if state is None else np.array(state, dtype=complex)
    for op in ops:
        perm = _swap_permutation(op.pair[0], op.pair[1], n_qubits)
        ph = np.exp(1j * op.angle)
        c, s = ph * math.cos(2 * op.angle), -1j * ph * math.sin(2 * op.angle)
        swapped = np.empty_like(out)
        swapped[perm] = out
        out = c * out + s * swapped
    return out


def normalize_angle(angle: float) -> float:
    """Representative in (-pi/4, pi/4]; exchange has period pi/2 up to phase."""
    q = math.pi / 2
    a = angle - q * round(angle / q)
    if a <= -math.pi / 4:
        a += q
    elif a > math.pi / 4:
        a -= q
    return a


# --- single-block synthesis -------------------------------------------------------

@lru_cache(maxsize=None)
def _logical_exchange_generator(pair: tuple[int, int]) -> np.ndarray:
    """``s_i . s_j`` projected on the one-block logical basis (2 x 2)."""
    i, j = pair
    b = _code_matrix(1)
    sw = np.zeros((16, 16))
    perm = _swap_permutation(i, j, 4)
    sw[perm, np.arange(16)] = 1.0
    heis = 2.0 * sw - np.eye(16)
    return b.conj().T @ heis @ b


def _logical_exchange(pair, angle: float) -> np.ndarray:
    w, v = np.linalg.eigh(_logical_exchange_generator(tuple(pair)))
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


def _sequence_unitary(pairs, angles) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for p, a in zip(pairs, angles):
        u = _logical_exchange(p, a) @ u
    return u


def _solve_sequence(pairs, target, rng, trials: int) -> np.ndarray | None:
    k = len(pairs)

    def residual(x):
        r = _sequence_unitary(pairs, x[:k]) - np.exp(1j * x[k]) * target
        return np.concatenate([r.real.ravel(), r.imag.ravel()])

    for _ in range(trials):
        x0 = np.concatenate([rng.uniform(-math.pi / 4, math.pi / 4, k), [rng.uniform(-math.pi, math.pi)]])
        sol = least_squares(residual, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.abs(sol.fun).max() < 1e-12:
            return sol.x[:k]
    return None


def synthesize_single_qubit_gate(target: np.ndarray, max_ops: int = 3, seed: int = 0,
                                 trials: int = 12, tol: float = 1e-10) -> list[ExchangeOp]:
    """Shortest alternating (0,1)/(1,2) exchange sequence realising ``target``.

    Lengths 0..``max_ops`` are tried in order, each from both starting
    pairs, with a deterministic multistart least-squares solve.  The result
    is verified on the physical 16-dim space.  Raises
    :class:`SynthesisFailed` if no sequence within ``max_ops`` matches.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2) or np.abs(target @ target.conj().T - np.eye(2)).max() > 1e-12:
        raise ValueError("target must be a 2x2 unitary")
    if phase_stripped_distance(np.eye(2), target) < tol:
        return []
    rng = np.random.default_rng(seed)
    for k in range(1, max_ops + 1):
        for start in (0, 1):
            pairs = [SINGLE_PAIRS[(start + m) % 2] for m in range(k)]
            angles = _solve_sequence(pairs, target, rng, trials)
            if angles is None:
                continue
            ops = [ExchangeOp(p, normalize_angle(a)) for p, a in zip(pairs, angles)]
            m, leak = project_logical(apply_ops(ops, 4), 1)
            if phase_stripped_distance(m, target) < tol and leak < tol:
                return ops
    raise SynthesisFailed(f"no alternating exchange sequence of length <= {max_ops} reaches the target")


# --- two-block controlled phase ------------------------------------------------------

@lru_cache(maxsize=None)
def _singlet_sector() -> tuple[np.ndarray, dict]:
    """Orthonormal basis of the 8-spin total singlet (code states first) and
    the SWAP matrices restricted to it."""
    n = 8
    idx = np.array([k for k in range(2 ** n) if bin(k).count("1") == 4])
    pairs = list(itertools.combinations(range(n), 2))
    swaps = {}
    total = np.zeros((idx.size, idx.size))
    pos = {int(k): m for m, k in enumerate(idx)}
    for p in pairs:
        perm = _swap_permutation(p[0], p[1], n)
        s = np.zeros((idx.size, idx.size))
        for m, k in enumerate(idx):
            s[pos[int(perm[k])], m] = 1.0
        swaps[p] = s
        total += s
    # total spin zero <=> sum of all SWAPs equals (n(n-1) - 3n)/4; the
    # projector is unique, so the basis below does not depend on how the
    # eigensolver picks vectors inside the degenerate eigenspace
    w, v = np.linalg.eigh(total)
    singlet = v[:, np.abs(w - (n * (n - 1) - 3 * n) / 4) < 1e-8]
    proj = singlet @ singlet.T
    cols = list(_code_matrix(2)[idx].real.T)
    for k in range(idx.size):
        if len(cols) == singlet.shape[1]:
            break
        u = proj[:, k].copy()
        for _ in range(2):
            for c in cols:
                u -= (c @ u) * c
        norm = np.linalg.norm(u)
        if norm > 1e-3:
            cols.append(u / norm)
    basis = np.array(cols).T
    if basis.shape[1] != singlet.shape[1] or np.abs(basis.T @ basis - np.eye(basis.shape[1])).max() > 1e-12:
        raise SynthesisFailed("singlet-sector basis construction failed")
    restricted = {p: basis.T @ s @ basis for p, s in swaps.items()}
    return basis, restricted


def _cphase_residual_jac(x, pairs, sw, target):
    L = len(pairs)
    dim = sw[pairs[0]].shape[0]
    eye = np.eye(dim)
    ang = x[:L]
    gates = [np.cos(2 * a) * eye - 1j * np.sin(2 * a) * sw[p] for p, a in zip(pairs, ang)]
    dgates = [-2 * np.sin(2 * a) * eye - 2j * np.cos(2 * a) * sw[p] for p, a in zip(pairs, ang)]
    right = [eye[:, :4].astype(complex)]
    for g in gates:
        right.append(g @ right[-1])
    left = [eye.astype(complex)]
    for g in reversed(gates):
        left.append(left[-1] @ g)
    left = left[::-1]
    t = np.zeros((dim, 4), dtype=complex)
    t[:4] = np.exp(1j * x[L]) * target
    r = (right[-1] - t).ravel()
    jac = np.empty((r.size, L + 1), dtype=complex)
    for k in range(L):
        jac[:, k] = (left[k + 1] @ dgates[k] @ right[k]).ravel()
    jac[:, L] = (-1j * t).ravel()
    return np.concatenate([r.real, r.imag]), np.vstack([jac.real, jac.imag])


@lru_cache(maxsize=8)
def _synthesize_cphase_cached(length: int, seed: int, trials: int) -> tuple[ExchangeOp, ...]:
    _, sw = _singlet_sector()
    chain = [(k, k + 1) for k in range(7)]
    pairs = [chain[m % len(chain)] for m in range(length)]
    rng = np.random.default_rng(seed)
    memo = {}

    def fun(x):
        memo["x"] = x.copy()
        memo["v"] = _cphase_residual_jac(x, pairs, sw, CPHASE)
        return memo["v"][0]

    def jac(x):
        if "x" not in memo or not np.array_equal(memo["x"], x):
            fun(x)
        return memo["v"][1]

    for _ in range(trials):
        x0 = np.concatenate([rng.uniform(0, math.pi / 2, length), [0.0]])
        sol = least_squares(fun, x0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=2000)
        if np.abs(sol.fun).max() < 1e-12:
            return tuple(ExchangeOp(p, normalize_angle(a)) for p, a in zip(pairs, sol.x[:length]))
    raise SynthesisFailed(f"controlled-phase search (length {length}, seed {seed}) did not converge "
                          f"in {trials} trials")


def synthesize_cphase(length: int = CPHASE_LENGTH, seed: int = CPHASE_SEED,
                      trials: int = 10, tol: float = 1e-10) -> list[ExchangeOp]:
    """Nearest-neighbour exchange chain realising the logical controlled phase.

    The search runs in the 14-dim total-singlet sector of eight spins, so the
    result can never leak; it is then verified on the full 256-dim space.
    """
    ops = list(_synthesize_cphase_cached(length, seed, trials))
    check_sequence(ops, CPHASE, 2, tol, SynthesisFailed)
    return ops


def check_sequence(ops, target, blocks: int, tol: float, exc=SequenceFileInvalid) -> tuple[float, float]:
    m, leak = project_logical(apply_ops(ops, 4 * blocks), blocks)
    dist = phase_stripped_distance(m, target)
    if not (dist < tol and leak < tol):
        raise exc(f"sequence realises the target only to distance {dist:.2e}, leakage {leak:.2e}")
    return dist, leak


# --- sequence files -----------------------------------------------------------------

def parse_sequence(text: str) -> list[ExchangeOp]:
    """Parse ``i j angle`` lines (1-based qubits, radians, ``#`` comments)."""
    ops = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise SequenceFileInvalid(f"line {lineno}: expected 'i j angle', got {raw.strip()!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            angle = float(parts[2])
        except ValueError:
            raise SequenceFileInvalid(f"line {lineno}: cannot parse {raw.strip()!r}") from None
        if not (1 <= i <= 8 and 1 <= j <= 8) or i == j:
            raise SequenceFileInvalid(f"line {lineno}: qubits must be distinct and in 1..8")
        if not math.isfinite(angle):
            raise SequenceFileInvalid(f"line {lineno}: angle is not finite")
        ops.append(ExchangeOp((i - 1, j - 1), angle))
    if not ops:
        raise SequenceFileInvalid("sequence file holds no operations")
    return ops


def format_sequence(ops: Sequence[ExchangeOp]) -> str:
    lines = ["# i j angle  (1-based qubits, radians)"]
    lines += [f"{op.pair[0] + 1} {op.pair[1] + 1} {op.angle!r}" for op in ops]
    return "\n".join(lines) + "\n"


def load_sequence_file(path: str | os.PathLike, tol: float = 1e-8) -> list[ExchangeOp]:
    """Read and validate a controlled-phase sequence by replaying it."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SequenceFileInvalid(f"cannot read {path}: {exc}") from None
    ops = parse_sequence(text)
    check_sequence(ops, CPHASE, 2, tol)
    return ops


# --- library ----------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _single_gates(seed: int) -> dict:
    return {
        "pi8": tuple(synthesize_single_qubit_gate(PI8, seed=seed)),
        "hadamard": tuple(synthesize_single_qubit_gate(HADAMARD, seed=seed)),
    }


@lru_cache(maxsize=None)
def _builtin_cphase() -> tuple[ExchangeOp, ...]:
    text = resources.files("cddsim.data").joinpath(BUILTIN_CPHASE).read_text(encoding="utf-8")
    ops = parse_sequence(text)
    check_sequence(ops, CPHASE, 2, 1e-10, SynthesisFailed)
    return tuple(ops)


def build_gate(name: str, cphase_sequence: str | os.PathLike | None = None,
               seed: int = CPHASE_SEED) -> LogicalGate:
    """One gate of the library (see :func:`gate_library`)."""
    if name == "memory":
        return LogicalGate("memory", (), np.eye(2, dtype=complex), 1)
    if name in ("pi8", "hadamard"):
        target = PI8 if name == "pi8" else HADAMARD
        return LogicalGate(name, _single_gates(seed)[name], target.copy(), 1, "synthesized")
    if name == "cphase":
        if cphase_sequence is not None:
            ops = tuple(load_sequence_file(cphase_sequence))
            source = f"file:{os.fspath(cphase_sequence)}"
        elif seed == CPHASE_SEED:
            ops = _builtin_cphase()
            source = f"synthesized:L={CPHASE_LENGTH},seed={seed}"
        else:
            ops = tuple(synthesize_cphase(seed=seed))
            source = f"synthesized:L={CPHASE_LENGTH},seed={seed}"
        return LogicalGate("cphase", ops, CPHASE.copy(), 2, source)
    raise ValueError(f"unknown gate {name!r}; expected one of {GATE_NAMES}")


def gate_library(cphase_sequence: str | os.PathLike | None = None,
                 seed: int = CPHASE_SEED) -> list[LogicalGate]:
    """Memory, pi/8, Hadamard and controlled-phase gates."""
    return [build_gate(name, cphase_sequence, seed) for name in ("memory", "pi8", "hadamard", "cphase")]
