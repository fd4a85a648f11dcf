"""Exact rational values, interning, and the canonical "p/q" string form.

All endpoint and certificate arithmetic in this package is exact. Levels
can be large, so endpoint tables store small integer ids into a shared
:class:`ValueTable` instead of Fraction objects; numpy does the bulk
moves on the id arrays and Fractions only ever touch the deduplicated
class representatives.
"""

from __future__ import annotations

import re
from fractions import Fraction

import numpy as np

_FRAC_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_frac(text: str) -> Fraction:
    """Parse a canonical rational string, accepting "p/q" and bare "p"."""
    m = _FRAC_RE.match(text)
    if m is None:
        raise ValueError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator: {text!r}")
    return Fraction(num, den)


def format_frac(value: Fraction) -> str:
    """Render a Fraction in the canonical reduced "p/q" form.

    The denominator is always written, so re-serialized output is
    byte-stable no matter which path produced the value.
    """
    f = Fraction(value)
    return f"{f.numerator}/{f.denominator}"


class ValueTable:
    """Interning table mapping Fractions to dense int ids and back."""

    def __init__(self) -> None:
        self._by_value: dict[Fraction, int] = {}
        self._values: list[Fraction] = []
        self._ranks: np.ndarray | None = None

    def add(self, value: Fraction) -> int:
        value = Fraction(value)
        vid = self._by_value.get(value)
        if vid is None:
            vid = len(self._values)
            self._by_value[value] = vid
            self._values.append(value)
            self._ranks = None
        return vid

    def ranks(self) -> np.ndarray:
        """Order-preserving relabeling of ids: ranks()[i] < ranks()[j]
        exactly when value(i) < value(j). Lets numpy compare endpoint
        arrays without touching Fractions element-wise.
        """
        if self._ranks is None or len(self._ranks) != len(self._values):
            order = sorted(range(len(self._values)), key=self._values.__getitem__)
            ranks = np.empty(len(self._values), dtype=np.int64)
            for r, vid in enumerate(order):
                ranks[vid] = r
            self._ranks = ranks
        return self._ranks

    def add_many(self, values) -> np.ndarray:
        return np.fromiter((self.add(v) for v in values), dtype=np.int64)

    def value(self, vid: int) -> Fraction:
        return self._values[int(vid)]

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, value: Fraction) -> bool:
        return Fraction(value) in self._by_value

    def values_for(self, vids: np.ndarray) -> list[Fraction]:
        return [self._values[int(v)] for v in vids]

    def unique_pairs(self, a: np.ndarray, b: np.ndarray) -> list[tuple[Fraction, Fraction]]:
        """Deduplicate two parallel id arrays into Fraction pairs."""
        if len(a) == 0:
            return []
        packed = np.stack([np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)], axis=1)
        uniq = np.unique(packed, axis=0)
        return [(self._values[int(x)], self._values[int(y)]) for x, y in uniq]


def frac_min(values):
    """Exact minimum of an iterable of Fractions (errors on empty)."""
    it = iter(values)
    best = next(it)
    for v in it:
        if v < best:
            best = v
    return best


def frac_max(values):
    """Exact maximum of an iterable of Fractions (errors on empty)."""
    it = iter(values)
    best = next(it)
    for v in it:
        if v > best:
            best = v
    return best


def pow2(n: int) -> Fraction:
    """2**n as an exact Fraction, for negative n included."""
    if n >= 0:
        return Fraction(1 << n, 1)
    return Fraction(1, 1 << (-n))
