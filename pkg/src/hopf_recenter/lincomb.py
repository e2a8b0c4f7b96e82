"""Finite linear combinations over hashable keys.

One container serves trees, plus-monomials and tensor pairs alike; the
coefficient type is whatever the caller feeds in (``Fraction`` for the exact
algebra, ``float`` for model-evaluated combinations).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Hashable, Iterable, Iterator, Optional


class LinComb:
    """Sparse map ``key -> coefficient`` with zero coefficients never stored."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[dict] = None):
        self.terms: dict = {}
        if terms:
            for k, c in terms.items():
                if c != 0:
                    self.terms[k] = c

    @classmethod
    def single(cls, key: Hashable, coeff=Fraction(1)) -> LinComb:
        out = cls()
        if key is not None and coeff != 0:
            out.terms[key] = coeff
        return out

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Hashable, object]]) -> LinComb:
        out = cls()
        for k, c in pairs:
            out.add_term(k, c)
        return out

    def add_term(self, key: Hashable, coeff) -> None:
        if key is None or coeff == 0:
            return
        c = self.terms.get(key, 0) + coeff
        if c == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = c

    def copy(self) -> LinComb:
        out = LinComb()
        out.terms = dict(self.terms)
        return out

    def __iter__(self) -> Iterator:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def items(self):
        return self.terms.items()

    def values(self):
        return self.terms.values()

    def get(self, key, default=0):
        return self.terms.get(key, default)

    def __getitem__(self, key):
        return self.terms.get(key, 0)

    def __eq__(self, other) -> bool:
        if isinstance(other, LinComb):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    __hash__ = None  # mutable during accumulation

    def __add__(self, other: LinComb) -> LinComb:
        out = self.copy()
        for k, c in other.terms.items():
            out.add_term(k, c)
        return out

    def __sub__(self, other: LinComb) -> LinComb:
        out = self.copy()
        for k, c in other.terms.items():
            out.add_term(k, -c)
        return out

    def __neg__(self) -> LinComb:
        return LinComb({k: -c for k, c in self.terms.items()})

    def scale(self, s) -> LinComb:
        if s == 0:
            return LinComb()
        return LinComb({k: c * s for k, c in self.terms.items()})

    def __mul__(self, s) -> LinComb:
        if isinstance(s, LinComb):
            return NotImplemented
        return self.scale(s)

    __rmul__ = __mul__

    def map_keys(self, fn: Callable) -> LinComb:
        """Linear extension of ``fn: key -> LinComb | key | None``."""
        out = LinComb()
        for k, c in self.terms.items():
            img = fn(k)
            if img is None:
                continue
            if isinstance(img, LinComb):
                for k2, c2 in img.terms.items():
                    out.add_term(k2, c * c2)
            else:
                out.add_term(img, c)
        return out

    def filter(self, pred: Callable[[Hashable], bool]) -> LinComb:
        return LinComb({k: c for k, c in self.terms.items() if pred(k)})

    def mass(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def sorted_items(self, key: Callable) -> list:
        return sorted(self.terms.items(), key=lambda kv: key(kv[0]))


def bilinear(a: LinComb, b: LinComb, product: Callable) -> LinComb:
    """Extend ``product(key_a, key_b) -> key | None`` bilinearly."""
    out = LinComb()
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            k = product(ka, kb)
            if k is not None:
                out.add_term(k, ca * cb)
    return out
