"""Independent reference implementations used by the tests.

Nothing here imports the package's operator, model or engine code: the
Hamiltonians are rebuilt with explicit Kronecker products, code states from
their amplitude tables, and propagation by plain matrix products or a
fixed-step Runge-Kutta integrator.  Only schedules (plain data) are read.
"""
from __future__ import annotations

import math
from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_loop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    da, db = a.shape[0], b.shape[0]
    out = np.zeros((da * db, da * db), dtype=complex)
    for i in range(da):
        for j in range(da):
            for k in range(db):
                for l in range(db):
                    out[i * db + k, j * db + l] = a[i, j] * b[k, l]
    return out


def taylor_expm(h: np.ndarray, t: float, terms: int = 30) -> np.ndarray:
    a = -1j * t * h
    out = np.eye(h.shape[0], dtype=complex)
    term = out.copy()
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def partial_trace_loop(rho: np.ndarray, ds: int, db: int) -> np.ndarray:
    out = np.zeros((ds, ds), dtype=complex)
    for i in range(ds):
        for j in range(ds):
            out[i, j] = sum(rho[i * db + b, j * db + b] for b in range(db))
    return out


def op_on(n: int, factors: dict) -> np.ndarray:
    """Tensor product with ``factors[q]`` on qubit q (qubit 0 leftmost)."""
    return reduce(np.kron, [factors.get(q, I2) for q in range(n)])


_PAULI_CACHE: dict = {}


def pauli_on(n: int, spec: dict) -> np.ndarray:
    key = (n, tuple(sorted(spec.items())))
    if key not in _PAULI_CACHE:
        _PAULI_CACHE[key] = op_on(n, {q: PAULI[a] for q, a in spec.items()})
    return _PAULI_CACHE[key]


# --- model -------------------------------------------------------------------------------

def linear_positions(n: int) -> list[tuple[float, float]]:
    return [(float(k), 0.0) for k in range(n)]


def dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def h_sb(ns: int, nb: int, J: float, positions=None) -> np.ndarray:
    n = ns + nb
    pos = positions or linear_positions(n)
    h = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for j in range(ns):
        for i in range(ns, n):
            w = J / 2.0 ** dist(pos[i], pos[j])
            for a in "xyz":
                h += w * pauli_on(n, {j: a, i: a})
    return h


def h_b(ns: int, nb: int, beta: float, positions=None) -> np.ndarray:
    n = ns + nb
    pos = positions or linear_positions(n)
    h = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for i in range(ns, n):
        for j in range(i + 1, n):
            w = beta / dist(pos[i], pos[j]) ** 3
            h += w * (pauli_on(n, {i: "y", j: "y"}) + pauli_on(n, {i: "z", j: "z"})
                      - 2 * pauli_on(n, {i: "x", j: "x"}))
    return h


def h_exchange(n: int, terms) -> np.ndarray:
    h = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for (i, j), w in terms:
        for a in "xyz":
            h += w * pauli_on(n, {i: a, j: a})
    return h


def global_pulse(n: int, ns: int, axis: str) -> np.ndarray:
    return pauli_on(n, {q: axis for q in range(ns)})


# --- code states -------------------------------------------------------------------------

def _ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits.replace("u", "0").replace("d", "1"), 2)] = 1.0
    return v


def code_states() -> tuple[np.ndarray, np.ndarray]:
    """``|0_L>``, ``|1_L>`` from their amplitude tables (u = up, d = down)."""
    zero = 0.5 * (_ket("udud") + _ket("dudu") - _ket("uddu") - _ket("duud"))
    one = (2 * _ket("uudd") + 2 * _ket("dduu") - _ket("uddu") - _ket("duud")
           - _ket("udud") - _ket("dudu")) / (2 * math.sqrt(3))
    return zero, one


def logical_vector(amps, blocks: int) -> np.ndarray:
    """Physical system state for per-block logical amplitudes."""
    zero, one = code_states()
    blocks_v = [a * zero + b * one for a, b in amps]
    return reduce(np.kron, blocks_v) if blocks > 1 else blocks_v[0]


def initial_state(amps, blocks: int, nb: int) -> np.ndarray:
    bath = np.ones(2 ** nb, dtype=complex) / math.sqrt(2 ** nb)
    return np.kron(logical_vector(amps, blocks), bath)


def fidelity(psi: np.ndarray, target: np.ndarray, ns: int, nb: int) -> float:
    rho = np.outer(psi, psi.conj())
    red = partial_trace_loop(rho, 2 ** ns, 2 ** nb) if 2 ** (ns + nb) <= 64 else \
        np.einsum("ibjb->ij", rho.reshape(2 ** ns, 2 ** nb, 2 ** ns, 2 ** nb))
    return math.sqrt(abs(target.conj() @ red @ target))


# --- propagation ------------------------------------------------------------------------

class BruteModel:
    """Dense z-frame Hamiltonians for a linear layout, built from scratch.

    Every generator used without finite pulses flips spins in pairs, so the
    z-basis parity sectors are invariant; products are kept per sector.
    Pass ``parity=False`` for schedules whose generators break parity.
    """

    def __init__(self, ns: int, nb: int, J: float, beta: float, parity: bool = True):
        self.ns, self.nb, self.n = ns, nb, ns + nb
        self.h0 = h_sb(ns, nb, J) + h_b(ns, nb, beta)
        idx = np.arange(2 ** self.n)
        if parity:
            odd = np.array([bin(i).count("1") & 1 for i in idx])
            self.sectors = [idx[odd == 0], idx[odd == 1]]
            self._cross = odd[:, None] != odd[None, :]
        else:
            self.sectors = [idx]
            self._cross = np.zeros((idx.size, idx.size), dtype=bool)
        self._eig: dict = {}
        self._unitary: dict = {}

    def generator(self, gen) -> np.ndarray:
        h = h_exchange(self.n, gen.exchange)
        if gen.bath:
            h = h + self.h0
        if gen.pulse_axis:
            h = h + (math.pi / (2 * gen.pulse_width)) * sum(
                pauli_on(self.n, {q: gen.pulse_axis}) for q in range(self.ns))
        return h

    def _split(self, a: np.ndarray) -> list[np.ndarray]:
        if np.abs(a[self._cross]).any():
            raise ValueError("operator mixes parity sectors; use parity=False")
        return [a[np.ix_(sec, sec)] for sec in self.sectors]

    def _join(self, blocks) -> np.ndarray:
        u = np.zeros((2 ** self.n, 2 ** self.n), dtype=complex)
        for sec, blk in zip(self.sectors, blocks):
            u[np.ix_(sec, sec)] = blk
        return u

    def _unitary_blocks(self, gen, duration: float) -> list[np.ndarray]:
        key = (gen, duration)
        if key in self._unitary:
            return self._unitary[key]
        if gen not in self._eig:
            h = self.generator(gen)
            if not np.abs(h.imag).any():
                h = h.real
            self._eig[gen] = [np.linalg.eigh(blk) for blk in self._split(h)]
        out = []
        for w, v in self._eig[gen]:
            if np.isrealobj(v):
                # real eigenvectors: two real products instead of one complex one
                out.append((v * np.cos(w * duration)) @ v.T - 1j * ((v * np.sin(w * duration)) @ v.T))
            else:
                out.append((v * np.exp(-1j * w * duration)) @ v.conj().T)
        self._unitary[key] = out
        return out

    def unitary(self, gen, duration: float) -> np.ndarray:
        return self._join(self._unitary_blocks(gen, duration))

    def _segment_blocks(self, seg) -> list[np.ndarray]:
        if seg.is_ideal:
            return self._split(global_pulse(self.n, self.ns, seg.ideal_axis))
        u = [np.eye(len(sec), dtype=complex) for sec in self.sectors]
        for gen, dur in seg.pieces():
            u = [p @ q for p, q in zip(self._unitary_blocks(gen, dur), u)]
        return u

    def segment(self, seg) -> np.ndarray:
        return self._join(self._segment_blocks(seg))

    def sequential(self, schedule) -> np.ndarray:
        """Product of segment unitaries, one at a time, latest on the left."""
        u = [np.eye(len(sec), dtype=complex) for sec in self.sectors]
        cache = {}
        for seg in schedule.segments:
            if seg.label not in cache:
                cache[seg.label] = self._segment_blocks(seg)
            u = [p @ q for p, q in zip(cache[seg.label], u)]
        return self._join(u)

    def rk4(self, schedule, psi: np.ndarray, steps_per_tau: int = 1000) -> np.ndarray:
        """Fixed-step RK4 through every timed piece; ideal pulses applied exactly."""
        psi = psi.astype(complex)
        h_step = schedule.tau0 / steps_per_tau
        for seg in schedule.segments:
            if seg.is_ideal:
                psi = global_pulse(self.n, self.ns, seg.ideal_axis) @ psi
                continue
            for gen, dur in seg.pieces():
                a = -1j * self.generator(gen)
                steps = max(1, int(round(dur / h_step)))
                dt = dur / steps
                for _ in range(steps):
                    k1 = a @ psi
                    k2 = a @ (psi + 0.5 * dt * k1)
                    k3 = a @ (psi + 0.5 * dt * k2)
                    k4 = a @ (psi + dt * k3)
                    psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return psi


def cdd_pattern(n: int) -> str:
    """Time-ordered letters of CDD level n: U for intervals, X/Z for pulses."""
    if n == 0:
        return "U"
    inner = cdd_pattern(n - 1)
    return inner + "X" + inner + "Z" + inner + "X" + inner + "Z"
