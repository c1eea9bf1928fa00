"""Dense operator algebra: Kronecker products, Hermitian exponentials,
partial trace, spectral norm and composition.

Operators are plain complex arrays: ``numpy.ndarray`` in standard
precision, :class:`~cddsim.core.dd.DDArray` in extended precision.  Every
function here accepts either and returns the same kind.

Matrix exponentials go through a Hermitian eigendecomposition.  Generators
that split into independent blocks (no nonzero entries coupling them) are
diagonalised block by block; with a conserved quantity this is much
cheaper than one dense eigensolve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import DimensionMismatch, NotHermitian
from .dd import DDArray, as_dd, dd_scalar, sqrt_real, unit_phases
from .kernels import jacobi
from .precision import STANDARD, Precision, precision_of


def _map(a, fn):
    """Apply an exact structural numpy operation to either array kind."""
    if isinstance(a, DDArray):
        return DDArray(fn(a.hi), fn(a.lo))
    return fn(a)


def dagger(a):
    return a.H if isinstance(a, DDArray) else a.conj().T


def max_abs(a) -> float:
    if isinstance(a, DDArray):
        return float(np.abs(a.to_complex()).max(initial=0.0))
    return float(np.abs(a).max(initial=0.0))


def identity(dim: int, precision: Precision = STANDARD):
    return precision.eye(dim)


def kron(a, b):
    """Kronecker product with ``a``'s index as the slow index."""
    if isinstance(a, DDArray) or isinstance(b, DDArray):
        a, b = as_dd(a), as_dd(b)
        (p, q), (r, s) = a.shape, b.shape
        out = a.reshape(p, 1, q, 1) * b.reshape(1, r, 1, s)
        return out.reshape(p * r, q * s)
    return np.kron(a, b)


# --- checks -----------------------------------------------------------------

def hermitian_tolerance(h) -> float:
    """Absolute tolerance on ``max|h - h^H|``: 1e-12 scaled to the backend
    epsilon and to the size of the entries."""
    prec = precision_of(h)
    return 1e-12 * (prec.epsilon / STANDARD.epsilon) * max(1.0, max_abs(h))


def hermiticity_error(h) -> float:
    if isinstance(h, DDArray):
        d = h - h.H
        return max_abs(d)
    return float(np.abs(h - h.conj().T).max(initial=0.0))


def is_hermitian(h) -> bool:
    return hermiticity_error(h) < hermitian_tolerance(h)


def check_hermitian(h) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {h.shape}")
    err = hermiticity_error(h)
    if not err < hermitian_tolerance(h):
        raise NotHermitian(f"max|H - H^dagger| = {err:.3e} exceeds {hermitian_tolerance(h):.1e}")


def unitarity_error(u) -> float:
    d = u.shape[0]
    g = u @ dagger(u)
    if isinstance(g, DDArray):
        g = g - as_dd(np.eye(d))
        return max_abs(g)
    return float(np.abs(g - np.eye(d)).max())


def is_unitary(u, tol: float = 1e-10) -> bool:
    return unitarity_error(u) < tol


# --- eigensystems -------------------------------------------------------------

def block_structure(h) -> list[np.ndarray]:
    """Index sets of the connected components of the nonzero pattern of ``h``.

    Entries that are exactly zero decouple; blocks are returned sorted by
    their smallest index, each as a sorted index array.
    """
    if isinstance(h, DDArray):
        mask = (h.hi != 0) | (h.lo != 0)
    else:
        mask = h != 0
    d = mask.shape[0]
    ncomp, labels = connected_components(csr_matrix(mask | mask.T), directed=False)
    order = np.argsort(labels, kind="stable")
    counts = np.bincount(labels, minlength=ncomp)
    groups = np.split(order, np.cumsum(counts)[:-1])
    groups.sort(key=lambda g: int(g[0]) if g.size else d)
    return [np.sort(g) for g in groups]


def dd_eigh(a: DDArray, max_sweeps: int = 30) -> tuple[DDArray, DDArray]:
    """Hermitian eigendecomposition in double-double precision.

    A double-precision ``eigh`` gives a starting basis, which is
    re-orthonormalised (Newton-Schulz) and refined by cyclic Jacobi
    rotations on the nearly diagonal ``V^H A V``.  Returns real eigenvalues
    (as a DDArray with zero imaginary part) and unitary eigenvectors.
    """
    n = a.shape[0]
    ac = a.to_complex()
    _, v0 = np.linalg.eigh((ac + ac.conj().T) / 2)
    v = as_dd(v0)
    eye = as_dd(np.eye(n))
    for _ in range(3):
        g = v.H @ v
        v = v @ ((eye * 3.0 - g) * 0.5)
    a1 = v.H @ (a @ v)
    a1 = (a1 + a1.H) * 0.5
    ah = np.ascontiguousarray(a1.hi)
    al = np.ascontiguousarray(a1.lo)
    vh = np.eye(n, dtype=complex)
    vl = np.zeros((n, n), dtype=complex)
    scale = max(1.0, float(np.abs(ah).max(initial=0.0)))
    jacobi(ah, al, vh, vl, 2.0 ** -112 * scale, max_sweeps)
    idx = np.arange(n)
    w = DDArray(ah[idx, idx].real + 0j, al[idx, idx].real + 0j)
    vec = v @ DDArray(vh, vl)
    return w, vec


def eigh(h):
    """Eigenvalues (ascending, standard precision) and eigenvectors."""
    check_hermitian(h)
    if isinstance(h, DDArray):
        return dd_eigh(h)
    return np.linalg.eigh(h)


@dataclass
class Eigensystem:
    """Block-diagonal eigendecomposition ``h = sum_b V_b diag(w_b) V_b^H``."""

    dim: int
    blocks: list  # (indices, eigenvalues, eigenvectors)

    @property
    def precision(self) -> Precision:
        if not self.blocks:
            return STANDARD
        return precision_of(self.blocks[0][2])

    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues as standard floats (ascending)."""
        vals = [np.real(np.asarray(w)) for _, w, _ in self.blocks]
        return np.sort(np.concatenate(vals)) if vals else np.zeros(0)

    def block_unitaries(self, t) -> list:
        """``[(indices, exp(-i h_b t)), ...]`` per block."""
        out = []
        for idx, w, v in self.blocks:
            out.append((idx, _exp_block(w, v, t)))
        return out

    def unitary(self, t):
        """Dense ``exp(-i h t)``."""
        prec = self.precision
        u = prec.zeros((self.dim, self.dim))
        for idx, ub in self.block_unitaries(t):
            if isinstance(u, DDArray):
                u.hi[np.ix_(idx, idx)] = ub.hi
                u.lo[np.ix_(idx, idx)] = ub.lo
            else:
                u[np.ix_(idx, idx)] = ub
        return u


def _exp_block(w, v, t):
    if isinstance(v, DDArray):
        tt = t if isinstance(t, DDArray) else dd_scalar(mpmath.mpf(t))
        ph = unit_phases(w * tt)
        return (v * ph.reshape(1, -1)) @ v.H
    ph = np.exp(-1j * w * t)
    return (v * ph[None, :]) @ v.conj().T


def eigensystem(h, blocks: Sequence[np.ndarray] | None = None) -> Eigensystem:
    """Eigendecompose ``h`` block by block (blocks detected if not given)."""
    check_hermitian(h)
    d = h.shape[0]
    groups = block_structure(h) if blocks is None else list(blocks)
    out = []
    for idx in groups:
        sub = h[np.ix_(idx, idx)] if not isinstance(h, DDArray) else DDArray(
            h.hi[np.ix_(idx, idx)], h.lo[np.ix_(idx, idx)])
        if isinstance(sub, DDArray):
            w, v = dd_eigh(sub)
        else:
            w, v = np.linalg.eigh(sub)
        out.append((np.asarray(idx), w, v))
    return Eigensystem(d, out)


def expm_hermitian(h, t):
    """``exp(-i h t)`` for Hermitian ``h`` via its eigendecomposition.

    ``t`` is a float, or (extended precision) an exact double-double scalar.
    Raises :class:`NotHermitian` if ``h`` fails the Hermiticity check.
    """
    return eigensystem(h).unitary(t)


def spectral_norm(h) -> float:
    """Largest eigenvalue magnitude of a Hermitian operator."""
    check_hermitian(h)
    if h.shape[0] == 0:
        return 0.0
    es = eigensystem(h)
    vals = es.eigenvalues()
    return float(np.abs(vals).max(initial=0.0))


# --- states and traces --------------------------------------------------------

def partial_trace_bath(rho, system_qubits: int, bath_qubits: int):
    """Trace out the trailing ``bath_qubits`` tensor slots of ``rho``."""
    ds, db = 2 ** system_qubits, 2 ** bath_qubits
    if rho.ndim != 2 or rho.shape != (ds * db, ds * db):
        raise DimensionMismatch(
            f"rho has shape {rho.shape}, expected {(ds * db, ds * db)} for "
            f"{system_qubits} system + {bath_qubits} bath qubits")
    if isinstance(rho, DDArray):
        r = rho.reshape(ds, db, ds, db)
        out = r[:, 0, :, 0]
        for b in range(1, db):
            out = out + r[:, b, :, b]
        return out
    return np.einsum("ibjb->ij", rho.reshape(ds, db, ds, db))


def compose(ops: Sequence, dim: int | None = None, precision: Precision = STANDARD):
    """Product ``ops[0] @ ops[1] @ ... @ ops[-1]``; the last factor acts first.

    An empty list gives the identity of size ``dim`` (1 if not given).
    """
    ops = list(ops)
    if not ops:
        return precision.eye(1 if dim is None else dim)
    d = ops[0].shape[0]
    for k, op in enumerate(ops):
        if op.ndim != 2 or op.shape != (d, d) or (dim is not None and d != dim):
            raise DimensionMismatch(f"operator {k} has shape {op.shape}, expected {(d, d)}")
    out = ops[-1]
    for op in reversed(ops[:-1]):
        out = op @ out
    return out


def norm(v) -> float:
    """Euclidean (Frobenius) norm."""
    if isinstance(v, DDArray):
        s = v.abs2().sum()
        h, l = s.real_value()
        return math.sqrt(h + l)
    return float(np.linalg.norm(v))


def normalize(v):
    n = norm(v)
    if n == 0:
        raise ValueError("cannot normalise a zero vector")
    if isinstance(v, DDArray):
        return v / sqrt_real(v.abs2().sum())
    return v / n


def walsh_hadamard(a, axis: int = 0):
    """Apply the Hadamard on every qubit along ``axis`` (length ``2**n``).

    Uses the fast transform, ``O(n 2**n)`` per fibre.  Conjugating an
    operator by it swaps the roles of X and Z on every qubit.
    """
    length = a.shape[axis]
    n = length.bit_length() - 1
    if 2 ** n != length:
        raise DimensionMismatch(f"axis length {length} is not a power of 2")
    x = _map(a, lambda m: np.moveaxis(m, axis, 0))
    rest = x.shape[1:]
    for q in range(n):
        y = x.reshape(2 ** q, 2, -1)
        s = y[:, 0] + y[:, 1]
        d = y[:, 0] - y[:, 1]
        x = _stack2(s, d).reshape(length, *rest)
    x = _scale_pow2(x, -(n // 2))
    if n % 2:
        x = x * (dd_scalar(mpmath.sqrt(mpmath.mpf(0.5))) if isinstance(x, DDArray)
                 else math.sqrt(0.5))
    return _map(x, lambda m: np.moveaxis(m, 0, axis))


def _stack2(s, d):
    if isinstance(s, DDArray):
        return DDArray(np.stack([s.hi, d.hi], axis=1), np.stack([s.lo, d.lo], axis=1))
    return np.stack([s, d], axis=1)


def _scale_pow2(x, k: int):
    f = 2.0 ** k  # exact in both backends
    return _map(x, lambda m: m * f)
