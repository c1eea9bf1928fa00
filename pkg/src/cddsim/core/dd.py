"""Complex double-double arithmetic on numpy arrays.

A value is stored as ``hi + lo`` where ``hi`` and ``lo`` are complex128
arrays and, componentwise, ``|lo| <= ulp(hi)/2``.  That gives roughly 32
significant decimal digits.  Elementwise operations are vectorised numpy
error-free transformations; the O(n^3) kernels (matrix product, Jacobi
eigensolver) live in :mod:`cddsim.core.kernels`.
"""
from __future__ import annotations

import mpmath
import numpy as np

EPS = 2.0 ** -104
_SPLITTER = 134217729.0  # 2**27 + 1


# --- real error-free transformations -------------------------------------

def two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def quick_two_sum(a, b):
    s = a + b
    e = b - (s - a)
    return s, e


def split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def dd_add(ah, al, bh, bl):
    s, e = two_sum(ah, bh)
    t, f = two_sum(al, bl)
    e = e + t
    s, e = quick_two_sum(s, e)
    e = e + f
    return quick_two_sum(s, e)


def dd_mul(ah, al, bh, bl):
    p, e = two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return quick_two_sum(p, e)


def dd_div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = dd_mul(bh, bl, q1, 0.0 * q1)
    rh, rl = dd_add(ah, al, -ph, -pl)
    q2 = rh / bh
    ph, pl = dd_mul(bh, bl, q2, 0.0 * q2)
    rh, rl = dd_add(rh, rl, -ph, -pl)
    q3 = rh / bh
    q1, q2 = quick_two_sum(q1, q2)
    return dd_add(q1, q2, q3, 0.0 * q3)


def dd_sqrt(ah, al):
    """Square root of a non-negative double-double (one Newton step)."""
    ah = np.asarray(ah, dtype=float)
    al = np.asarray(al, dtype=float)
    x = np.sqrt(ah)
    safe = np.where(x > 0, x, 1.0)
    sh, sl = two_prod(x, x)
    rh, rl = dd_add(ah, al, -sh, -sl)
    corr = rh / (2.0 * safe)
    out_h, out_l = quick_two_sum(x, np.where(x > 0, corr, 0.0))
    return out_h, out_l


# --- complex helpers -------------------------------------------------------

def _parts(z):
    return np.real(z), np.imag(z)


def cmul(ah, al, bh, bl):
    """(ah + al) * (bh + bl) for complex double-doubles."""
    arh, aih = _parts(ah)
    arl, ail = _parts(al)
    brh, bih = _parts(bh)
    brl, bil = _parts(bl)
    p1 = dd_mul(arh, arl, brh, brl)
    p2 = dd_mul(aih, ail, bih, bil)
    p3 = dd_mul(arh, arl, bih, bil)
    p4 = dd_mul(aih, ail, brh, brl)
    rh, rl = dd_add(p1[0], p1[1], -p2[0], -p2[1])
    ih, il = dd_add(p3[0], p3[1], p4[0], p4[1])
    return rh + 1j * ih, rl + 1j * il


def cadd(ah, al, bh, bl):
    rh, rl = dd_add(np.real(ah), np.real(al), np.real(bh), np.real(bl))
    ih, il = dd_add(np.imag(ah), np.imag(al), np.imag(bh), np.imag(bl))
    return rh + 1j * ih, rl + 1j * il


def _pairwise_sum(h, l):
    """Sum a 1-D double-double (real) array by pairwise reduction."""
    h = np.asarray(h, dtype=float).ravel()
    l = np.asarray(l, dtype=float).ravel()
    if h.size == 0:
        return 0.0, 0.0
    while h.size > 1:
        if h.size % 2:
            h = np.append(h, 0.0)
            l = np.append(l, 0.0)
        h, l = dd_add(h[0::2], l[0::2], h[1::2], l[1::2])
    return float(h[0]), float(l[0])


class DDArray:
    """Complex double-double array with a small numpy-like surface."""

    __array_priority__ = 1000  # make ndarray defer to our reflected operators

    def __init__(self, hi, lo=None):
        self.hi = np.asarray(hi, dtype=complex)
        self.lo = np.zeros_like(self.hi) if lo is None else np.asarray(lo, dtype=complex)
        if self.lo.shape != self.hi.shape:
            raise ValueError("hi/lo shape mismatch")

    # construction ---------------------------------------------------------

    @classmethod
    def from_mp(cls, values) -> "DDArray":
        """Round an array of mpmath numbers to double-double."""
        arr = np.asarray(values, dtype=object)
        hi = np.empty(arr.shape, dtype=complex)
        lo = np.empty(arr.shape, dtype=complex)
        with mpmath.workprec(160):
            for idx, v in np.ndenumerate(arr):
                v = mpmath.mpc(v)
                rh, ih = float(v.real), float(v.imag)
                hi[idx] = complex(rh, ih)
                lo[idx] = complex(float(v.real - rh), float(v.imag - ih))
        return cls(hi, lo)

    def to_mp(self) -> np.ndarray:
        out = np.empty(self.shape, dtype=object)
        with mpmath.workprec(160):
            for idx in np.ndindex(*self.shape):
                h, l = self.hi[idx], self.lo[idx]
                out[idx] = (mpmath.mpc(h.real, h.imag) + mpmath.mpc(l.real, l.imag))
        return out

    # numpy-like attributes -------------------------------------------------

    @property
    def shape(self):
        return self.hi.shape

    @property
    def ndim(self):
        return self.hi.ndim

    @property
    def size(self):
        return self.hi.size

    def __len__(self):
        return len(self.hi)

    @property
    def T(self) -> "DDArray":
        return DDArray(self.hi.T, self.lo.T)

    def conj(self) -> "DDArray":
        return DDArray(np.conj(self.hi), np.conj(self.lo))

    @property
    def H(self) -> "DDArray":
        return DDArray(np.conj(self.hi.T), np.conj(self.lo.T))

    def copy(self) -> "DDArray":
        return DDArray(self.hi.copy(), self.lo.copy())

    def reshape(self, *shape) -> "DDArray":
        return DDArray(self.hi.reshape(*shape), self.lo.reshape(*shape))

    def ravel(self) -> "DDArray":
        return DDArray(self.hi.ravel(), self.lo.ravel())

    def __getitem__(self, key) -> "DDArray":
        return DDArray(self.hi[key], self.lo[key])

    def __setitem__(self, key, value):
        value = as_dd(value)
        self.hi[key] = value.hi
        self.lo[key] = value.lo

    def to_complex(self) -> np.ndarray:
        return self.hi + self.lo

    def __array__(self, dtype=None, copy=None):
        out = self.to_complex()
        return out if dtype is None else out.astype(dtype)

    def __repr__(self):
        return f"DDArray(shape={self.shape})"

    # arithmetic ------------------------------------------------------------

    def __neg__(self):
        return DDArray(-self.hi, -self.lo)

    def __add__(self, other):
        o = as_dd(other)
        return DDArray(*cadd(self.hi, self.lo, o.hi, o.lo))

    __radd__ = __add__

    def __sub__(self, other):
        o = as_dd(other)
        return DDArray(*cadd(self.hi, self.lo, -o.hi, -o.lo))

    def __rsub__(self, other):
        return as_dd(other) - self

    def __mul__(self, other):
        o = as_dd(other)
        return DDArray(*cmul(self.hi, self.lo, o.hi, o.lo))

    __rmul__ = __mul__

    def __truediv__(self, other):
        """Division by a real scalar or real array (all we need)."""
        o = as_dd(other)
        if np.any(np.imag(o.hi)) or np.any(np.imag(o.lo)):
            raise NotImplementedError("complex division")
        bh, bl = np.real(o.hi), np.real(o.lo)
        rh, rl = dd_div(np.real(self.hi), np.real(self.lo), bh, bl)
        ih, il = dd_div(np.imag(self.hi), np.imag(self.lo), bh, bl)
        return DDArray(rh + 1j * ih, rl + 1j * il)

    def __matmul__(self, other):
        from .kernels import gemm

        o = as_dd(other)
        a, b = self, o
        vec = b.ndim == 1
        if vec:
            b = b.reshape(-1, 1)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"matmul shape mismatch {a.shape} @ {b.shape}")
        ch, cl = gemm(a.hi, a.lo, b.hi, b.lo)
        out = DDArray(ch, cl)
        if vec:
            out = out.reshape(-1)
        if self.ndim == 1:
            out = out.reshape(out.shape[1:] if out.ndim > 1 else ())
        return out

    def __rmatmul__(self, other):
        return as_dd(other) @ self

    # reductions ------------------------------------------------------------

    def abs2(self) -> "DDArray":
        """Elementwise ``|z|**2`` (imaginary part zero)."""
        rh, rl = _parts(self.hi)[0], _parts(self.lo)[0]
        ih, il = _parts(self.hi)[1], _parts(self.lo)[1]
        a = dd_mul(rh, rl, rh, rl)
        b = dd_mul(ih, il, ih, il)
        sh, sl = dd_add(a[0], a[1], b[0], b[1])
        return DDArray(sh + 0j, sl + 0j)

    def sum(self) -> "DDArray":
        rh, rl = _pairwise_sum(np.real(self.hi), np.real(self.lo))
        ih, il = _pairwise_sum(np.imag(self.hi), np.imag(self.lo))
        return DDArray(np.array(complex(rh, ih)), np.array(complex(rl, il)))

    def real_value(self) -> tuple[float, float]:
        """(hi, lo) of a real scalar."""
        return float(np.real(self.hi)), float(np.real(self.lo))


def as_dd(value) -> DDArray:
    if isinstance(value, DDArray):
        return value
    return DDArray(np.asarray(value, dtype=complex))


def dd_scalar(x) -> DDArray:
    """Double-double scalar from an mpmath-convertible value (e.g. ``mpmath.pi/2``)."""
    return DDArray.from_mp(np.array(x, dtype=object))


def sqrt_real(x: DDArray) -> DDArray:
    h, l = dd_sqrt(np.real(x.hi), np.real(x.lo))
    return DDArray(np.asarray(h) + 0j, np.asarray(l) + 0j)


def unit_phases(angles: DDArray) -> DDArray:
    """``exp(-1j * angles)`` for a real double-double vector, via mpmath."""
    vals = angles.to_mp()
    out = np.empty(vals.shape, dtype=object)
    with mpmath.workprec(160):
        for idx, v in np.ndenumerate(vals):
            out[idx] = mpmath.expj(-mpmath.re(v))
    return DDArray.from_mp(out)
