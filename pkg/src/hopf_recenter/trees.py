"""Canonical decorated trees and the operations that live purely on them.

A tree is stored through its root: the polynomial decoration ``X^k``, an
optional noise mark (``Xi`` or ``dXi``), and a multiset of planted children
``I_a(child)`` kept sorted by a canonical key, so that structural equality is
non-planar equality.
"""

from __future__ import annotations

import enum
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from typing import Iterator, Optional

from .lincomb import LinComb

MultiIndex = tuple[int, ...]
Degree = Fraction


# -- multi-indices -----------------------------------------------------------

def zero_index(d: int) -> MultiIndex:
    return (0,) * (d + 1)


def unit_index(d: int, j: int) -> MultiIndex:
    out = [0] * (d + 1)
    out[j] = 1
    return tuple(out)


def scaled_size(n: MultiIndex) -> int:
    """Parabolic size ``|n|_s = 2 n_0 + n_1 + ... + n_d``."""
    return 2 * n[0] + sum(n[1:])


def index_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(map(operator.add, a, b))


def index_sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(map(operator.sub, a, b))


def index_le(a: MultiIndex, b: MultiIndex) -> bool:
    return all(x <= y for x, y in zip(a, b))


def index_factorial(n: MultiIndex) -> int:
    return math.prod(math.factorial(x) for x in n)


def index_binomial(n: MultiIndex, k: MultiIndex) -> int:
    return math.prod(math.comb(x, y) for x, y in zip(n, k))


def sub_indices(n: MultiIndex) -> Iterator[MultiIndex]:
    """All ``k <= n`` componentwise."""
    return iproduct(*(range(x + 1) for x in n))


@lru_cache(maxsize=None)
def indices_below(d: int, bound: Fraction, strict: bool = True) -> tuple[MultiIndex, ...]:
    """Multi-indices with ``|n|_s < bound`` (or ``<=`` when not strict), sorted."""
    bound = Fraction(bound)
    if bound < 0 or (strict and bound == 0):
        return ()
    top = math.floor(bound)
    out = []
    for n in iproduct(range(top // 2 + 1), *([range(top + 1)] * d)):
        s = scaled_size(n)
        if s < bound or (not strict and s == bound):
            out.append(n)
    out.sort(key=lambda n: (scaled_size(n), n))
    return tuple(out)


# -- parameters ----------------------------------------------------------------

@dataclass(frozen=True)
class Parameters:
    d: int
    alpha: Fraction
    kappa: Fraction = Fraction(1, 100)

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "kappa", Fraction(self.kappa))
        if self.d < 0:
            raise ValueError(f"space dimension must be >= 0, got {self.d}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        object.__setattr__(self, "_hash", hash((self.d, self.alpha, self.kappa)))

    def __hash__(self) -> int:
        # parameters key every memo table, so the hash is computed once
        return self._hash

    def noise_degree(self, noise: "Noise", variant: int) -> Fraction:
        if noise is Noise.NONE:
            return Fraction(0)
        if noise is Noise.XI or variant == 0:
            return self.alpha
        gain = Fraction(self.d + 2, 2)
        if variant == 1:
            return self.alpha + gain
        if variant == 2:
            return self.alpha + gain + 2 * self.kappa
        raise ValueError(f"degree variant must be 0, 1 or 2, got {variant}")


# -- trees ---------------------------------------------------------------------

class Noise(enum.IntEnum):
    NONE = 0
    XI = 1
    XIDOT = 2


@dataclass(frozen=True, eq=False)
class DecoratedTree:
    poly: MultiIndex
    noise: Noise = Noise.NONE
    children: tuple[tuple[MultiIndex, "DecoratedTree"], ...] = ()
    key: tuple = field(init=False, repr=False)
    _hash: int = field(init=False, repr=False)

    def __post_init__(self):
        kids = tuple(sorted(self.children, key=lambda c: (c[0], c[1].key)))
        object.__setattr__(self, "children", kids)
        object.__setattr__(self, "noise", Noise(self.noise))
        key = (self.poly, int(self.noise), tuple((a, t.key) for a, t in kids))
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return (isinstance(other, DecoratedTree) and self._hash == other._hash
                and self.key == other.key)

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: DecoratedTree) -> bool:
        return self.key < other.key

    def __repr__(self) -> str:
        return f"DecoratedTree({to_string(self)!r})"

    def __str__(self) -> str:
        return to_string(self)

    @property
    def dim(self) -> int:
        return len(self.poly) - 1

    def is_monomial(self) -> bool:
        return self.noise is Noise.NONE and not self.children

    def is_unit(self) -> bool:
        return self.is_monomial() and not any(self.poly)

    def is_planted(self) -> bool:
        return (self.noise is Noise.NONE and len(self.children) == 1
                and not any(self.poly))


Tree = DecoratedTree
TreeOrZero = Optional[DecoratedTree]


def unit(d: int) -> DecoratedTree:
    return DecoratedTree(zero_index(d))


def monomial(k: MultiIndex) -> DecoratedTree:
    return DecoratedTree(tuple(k))


def xi(d: int) -> DecoratedTree:
    return DecoratedTree(zero_index(d), Noise.XI)


def xidot(d: int) -> DecoratedTree:
    return DecoratedTree(zero_index(d), Noise.XIDOT)


def planted(a: MultiIndex, t: TreeOrZero) -> TreeOrZero:
    """``I_a(t)``; vanishes on monomials (and on zero)."""
    if t is None or t.is_monomial():
        return None
    return DecoratedTree(zero_index(len(a) - 1), Noise.NONE, ((tuple(a), t),))


def tree_product(a: TreeOrZero, b: TreeOrZero) -> TreeOrZero:
    """Root-identifying product; ``None`` stands for the zero element."""
    if a is None or b is None:
        return None
    if a.noise is not Noise.NONE and b.noise is not Noise.NONE:
        return None
    if b.is_unit():
        return a
    if a.is_unit():
        return b
    return DecoratedTree(index_add(a.poly, b.poly),
                         a.noise if a.noise is not Noise.NONE else b.noise,
                         a.children + b.children)


def product_of(factors, d: int) -> TreeOrZero:
    out: TreeOrZero = unit(d)
    for f in factors:
        out = tree_product(out, f)
    return out


def root_factors(t: DecoratedTree) -> list[DecoratedTree]:
    """Elementary factors whose tree product is ``t``."""
    d = t.dim
    out = []
    if any(t.poly):
        out.append(monomial(t.poly))
    if t.noise is not Noise.NONE:
        out.append(DecoratedTree(zero_index(d), t.noise))
    for a, c in t.children:
        out.append(planted(a, c))
    return out


def without_child(t: DecoratedTree, idx: int) -> DecoratedTree:
    kids = t.children[:idx] + t.children[idx + 1:]
    return DecoratedTree(t.poly, t.noise, kids)


def with_noise(t: DecoratedTree, noise: Noise) -> DecoratedTree:
    return DecoratedTree(t.poly, noise, t.children)


def contains_xidot(t: DecoratedTree) -> bool:
    return t.noise is Noise.XIDOT or any(contains_xidot(c) for _, c in t.children)


def contains_interior_xidot(t: DecoratedTree) -> bool:
    """True when some ``dXi`` sits inside a planted subtree (not at the root)."""
    return any(contains_xidot(c) for _, c in t.children)


def node_count(t: DecoratedTree) -> int:
    return 1 + sum(node_count(c) for _, c in t.children)


@lru_cache(maxsize=None)
def poly_order(t: DecoratedTree) -> int:
    """Total ``|k|_s`` of the node decorations across the whole tree."""
    return scaled_size(t.poly) + sum(poly_order(c) for _, c in t.children)


def depth(t: DecoratedTree) -> int:
    return max((1 + depth(c) for _, c in t.children), default=0)


@lru_cache(maxsize=None)
def noise_count(t: DecoratedTree) -> int:
    own = 0 if t.noise is Noise.NONE else 1
    return own + sum(noise_count(c) for _, c in t.children)


@lru_cache(maxsize=None)
def deg(t: DecoratedTree, variant: int, p: Parameters) -> Fraction:
    out = Fraction(scaled_size(t.poly)) + p.noise_degree(t.noise, variant)
    for a, c in t.children:
        out += deg(c, variant, p) + 2 - scaled_size(a)
    return out


@lru_cache(maxsize=None)
def deg_planted(a: MultiIndex, t: DecoratedTree, variant: int, p: Parameters) -> Fraction:
    """``deg(I_a(t))`` without building the planted tree."""
    return deg(t, variant, p) + 2 - scaled_size(a)


@lru_cache(maxsize=None)
def symmetry_factor(t: DecoratedTree) -> int:
    """``S(t) = k! prod_i beta_i! S(t_i)^beta_i`` over distinct child classes."""
    out = index_factorial(t.poly)
    counts: dict[tuple, int] = {}
    for a, c in t.children:
        counts[(a, c)] = counts.get((a, c), 0) + 1
    for (_, c), beta in counts.items():
        out *= math.factorial(beta) * symmetry_factor(c) ** beta
    return out


def inner_product(t: DecoratedTree, s: DecoratedTree) -> int:
    return symmetry_factor(t) if t == s else 0


def inner_product_lc(a: LinComb, b: LinComb):
    return sum(c * b.get(t) * symmetry_factor(t) for t, c in a.items() if t in b.terms)


# -- derivations ---------------------------------------------------------------

def _factor_derivative(n: MultiIndex, f: DecoratedTree) -> LinComb:
    if not any(n):
        return LinComb.single(f, Fraction(1))
    if f.is_monomial():
        if not index_le(n, f.poly):
            return LinComb()
        coeff = Fraction(index_factorial(f.poly), index_factorial(index_sub(f.poly, n)))
        return LinComb.single(monomial(index_sub(f.poly, n)), coeff)
    if f.noise is not Noise.NONE:
        return LinComb()
    (a, c), = f.children
    return LinComb.single(planted(index_add(a, n), c), Fraction(1))


def lc_product(a: LinComb, b: LinComb) -> LinComb:
    out = LinComb()
    for ta, ca in a.items():
        for tb, cb in b.items():
            out.add_term(tree_product(ta, tb), ca * cb)
    return out


@lru_cache(maxsize=None)
def abstract_derivative(n: MultiIndex, t: DecoratedTree) -> LinComb:
    """``D_n`` extended by the Leibniz rule over the root factors.

    The noise factor only survives the zeroth-order part of the split.
    """
    orders = list(sub_indices(n))
    # derivatives of the running product, for every order m <= n
    acc = {m: LinComb() for m in orders}
    acc[zero_index(t.dim)] = LinComb.single(unit(t.dim), Fraction(1))
    for f in root_factors(t):
        new = {}
        for m in orders:
            total = LinComb()
            for j in sub_indices(m):
                if not acc[j]:
                    continue
                df = _factor_derivative(index_sub(m, j), f)
                if df:
                    total = total + lc_product(acc[j], df).scale(index_binomial(m, j))
            new[m] = total
        acc = new
    return acc[tuple(n)]


def abstract_derivative_lc(n: MultiIndex, lc: LinComb) -> LinComb:
    return lc.map_keys(lambda t: abstract_derivative(tuple(n), t))


@lru_cache(maxsize=None)
def malliavin(t: DecoratedTree) -> LinComb:
    """``D_Xi``: sum over all single replacements of ``Xi`` by ``dXi``."""
    if contains_xidot(t):
        raise ValueError(f"D_Xi is defined on trees without dXi, got {to_string(t)}")
    out = LinComb()
    if t.noise is Noise.XI:
        out.add_term(with_noise(t, Noise.XIDOT), Fraction(1))
    for idx, (a, c) in enumerate(t.children):
        rest = without_child(t, idx)
        for dc, coeff in malliavin(c).items():
            out.add_term(tree_product(rest, planted(a, dc)), coeff)
    return out


def malliavin_lc(lc: LinComb) -> LinComb:
    return lc.map_keys(malliavin)


def q0_project(lc: LinComb) -> LinComb:
    """Drop every term whose tree contains ``dXi``."""
    return lc.filter(lambda t: not contains_xidot(t))


def q0_interior_project(lc: LinComb) -> LinComb:
    """Drop terms with ``dXi`` inside a planted subtree; a root ``dXi`` is kept."""
    return lc.filter(lambda t: not contains_interior_xidot(t))


# -- text form -----------------------------------------------------------------

class TreeSyntaxError(ValueError):
    def __init__(self, msg: str, text: str, pos: int):
        super().__init__(f"{msg} at position {pos}: {text[:pos]}<<>>{text[pos:]}")
        self.pos = pos


def _index_str(n: MultiIndex) -> str:
    return "(" + ",".join(str(x) for x in n) + ")"


@lru_cache(maxsize=None)
def to_string(t: DecoratedTree) -> str:
    parts = []
    if any(t.poly):
        parts.append("X^" + _index_str(t.poly))
    if t.noise is Noise.XI:
        parts.append("Xi")
    elif t.noise is Noise.XIDOT:
        parts.append("dXi")
    for a, c in t.children:
        inner = to_string(c)
        if any(a):
            parts.append(f"I[{_index_str(a)}]({inner})")
        else:
            parts.append(f"I({inner})")
    return " * ".join(parts) if parts else "1"


class _Parser:
    def __init__(self, text: str, d: int):
        self.text = text
        self.d = d
        self.pos = 0

    def error(self, msg: str):
        raise TreeSyntaxError(msg, self.text, self.pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos)

    def expect(self, s: str):
        if not self.peek(s):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def index(self) -> MultiIndex:
        self.expect("(")
        vals = []
        while True:
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("expected a natural number")
            vals.append(int(self.text[start:self.pos]))
            if self.peek(","):
                self.pos += 1
                continue
            self.expect(")")
            break
        if len(vals) != self.d + 1:
            self.pos = start
            self.error(f"multi-index needs {self.d + 1} entries, got {len(vals)}")
        return tuple(vals)

    def product(self) -> DecoratedTree:
        start = self.pos
        out = self.factor()
        while self.peek("*"):
            self.pos += 1
            nxt = self.factor()
            merged = tree_product(out, nxt)
            if merged is None:
                self.pos = start
                self.error("product carries two noises at one node and vanishes")
            out = merged
        return out

    def factor(self) -> DecoratedTree:
        self.skip()
        start = self.pos
        if self.peek("dXi"):
            self.pos += 3
            return xidot(self.d)
        if self.peek("Xi"):
            self.pos += 2
            return xi(self.d)
        if self.peek("X^"):
            self.pos += 2
            return monomial(self.index())
        if self.peek("I"):
            self.pos += 1
            a = zero_index(self.d)
            if self.peek("["):
                self.pos += 1
                a = self.index()
                self.expect("]")
            self.expect("(")
            inner = self.product()
            self.expect(")")
            out = planted(a, inner)
            if out is None:
                self.pos = start
                self.error("I_a applied to a monomial vanishes")
            return out
        if self.peek("1"):
            self.pos += 1
            return unit(self.d)
        if self.peek("("):
            self.pos += 1
            inner = self.product()
            self.expect(")")
            return inner
        self.error("expected a tree factor")


def parse_tree(text: str, d: int) -> DecoratedTree:
    """Parse the tree grammar ``1 | Xi | dXi | X^(k) | I[(a)](t) | t * t``."""
    p = _Parser(text, d)
    out = p.product()
    p.skip()
    if p.pos != len(text):
        p.error("unexpected trailing input")
    return out
