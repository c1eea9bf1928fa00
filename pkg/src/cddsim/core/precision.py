"""Scalar precision backends.

``standard`` is IEEE double (complex128 numpy arrays).  ``extended`` is
complex double-double (:class:`~cddsim.core.dd.DDArray`), roughly 32 digits.
Every array function in :mod:`cddsim.core.linalg` dispatches on the array
type, so one run uses one backend throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dd import EPS as DD_EPS
from .dd import DDArray, as_dd


@dataclass(frozen=True)
class Precision:
    """A scalar field: its name and machine epsilon."""

    name: str
    epsilon: float

    @property
    def extended(self) -> bool:
        return self.name == "extended"

    def lift(self, a):
        """Convert a complex array (or DDArray) into this backend's array type."""
        if self.extended:
            return as_dd(a)
        if isinstance(a, DDArray):
            return a.to_complex()
        return np.asarray(a, dtype=complex)

    def eye(self, d: int):
        return self.lift(np.eye(d, dtype=complex))

    def zeros(self, shape):
        return self.lift(np.zeros(shape, dtype=complex))

    @property
    def floor(self) -> float:
        """Smallest 1-F the backend can be trusted to resolve."""
        return 64.0 * self.epsilon


STANDARD = Precision("standard", float(np.finfo(np.float64).eps))
EXTENDED = Precision("extended", DD_EPS)
_BY_NAME = {"standard": STANDARD, "extended": EXTENDED}


def get_precision(name: str | Precision) -> Precision:
    if isinstance(name, Precision):
        return name
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown precision {name!r}; expected one of {sorted(_BY_NAME)}") from None


def precision_of(a) -> Precision:
    return EXTENDED if isinstance(a, DDArray) else STANDARD


def to_complex(a) -> np.ndarray:
    return a.to_complex() if isinstance(a, DDArray) else np.asarray(a, dtype=complex)
