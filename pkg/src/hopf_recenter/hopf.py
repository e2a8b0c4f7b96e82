"""Coactions, positive coproducts, antipodes and the hatted maps.

All maps here are exact: coefficients are ``Fraction`` and every sum over a
multi-index is cut off by the positivity of the planted factor it feeds, which
keeps the sums finite.  Variant ``i`` selects the degree ``deg_i`` used for the
cut-offs.  ``dXi`` may appear as a generator of the positive algebra only for
variant 2, where it is primitive.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

from gmpy2 import mpq

from .lincomb import LinComb
from .trees import (
    DecoratedTree, MultiIndex, Noise, Parameters, contains_xidot, deg, deg_planted,
    index_add, index_binomial, index_factorial, index_sub, indices_below, malliavin,
    monomial, planted, q0_project, scaled_size, sub_indices, to_string, tree_product,
    unit, zero_index, _index_str,
)

ONE = mpq(1)


def _factor_order(f) -> tuple:
    # hashes are cached on trees; the full key only breaks hash ties
    return (f[0], f[1]._hash, f[1].key)


class PlusMonomial:
    """``X^k dXi^q prod_j I^+_{a_j}(t_j)`` in the positive algebra.

    Instances are immutable; the planted factors are kept sorted so equal
    monomials share one key.
    """

    __slots__ = ("poly", "dot", "planted", "key", "_hash")

    def __init__(self, poly: MultiIndex, dot: int = 0,
                 planted: tuple[tuple[MultiIndex, DecoratedTree], ...] = ()):
        if len(planted) > 1:
            planted = tuple(sorted(planted, key=_factor_order))
        self._set(tuple(poly), dot, tuple(planted))

    def _set(self, poly, dot, planted) -> None:
        self.poly = poly
        self.dot = dot
        self.planted = planted
        self.key = (poly, dot, planted)
        self._hash = hash(self.key)

    @classmethod
    def _raw(cls, poly, dot, planted) -> PlusMonomial:
        out = cls.__new__(cls)
        out._set(poly, dot, planted)
        return out

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return (isinstance(other, PlusMonomial) and self._hash == other._hash
                and self.key == other.key)

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: PlusMonomial) -> bool:
        return self.sort_key() < other.sort_key()

    def sort_key(self) -> tuple:
        return (self.poly, self.dot, tuple((a, t.key) for a, t in self.planted))

    def __mul__(self, other: PlusMonomial) -> PlusMonomial:
        if other.is_unit():
            return self
        if self.is_unit():
            return other
        if any(other.poly):
            poly = index_add(self.poly, other.poly) if any(self.poly) else other.poly
        else:
            poly = self.poly
        return PlusMonomial._raw(poly, self.dot + other.dot,
                                 _merge_sorted(self.planted, other.planted))

    def __str__(self) -> str:
        return plus_to_string(self)

    def __repr__(self) -> str:
        return f"PlusMonomial({plus_to_string(self)!r})"

    def is_unit(self) -> bool:
        return not self.planted and not self.dot and not any(self.poly)

    def generators(self) -> list[PlusMonomial]:
        d = len(self.poly) - 1
        out = []
        if any(self.poly):
            out.append(PlusMonomial(self.poly))
        if self.dot:
            out.append(PlusMonomial(zero_index(d), self.dot))
        for f in self.planted:
            out.append(PlusMonomial(zero_index(d), 0, (f,)))
        return out


def _merge_sorted(a: tuple, b: tuple) -> tuple:
    if not b:
        return a
    if not a:
        return b
    if len(a) == 1 and len(b) == 1:
        return a + b if _factor_order(a[0]) <= _factor_order(b[0]) else b + a
    return tuple(sorted(a + b, key=_factor_order))


def plus_unit(d: int) -> PlusMonomial:
    return PlusMonomial(zero_index(d))


def plus_poly(k: MultiIndex) -> PlusMonomial:
    return PlusMonomial(tuple(k))


def plus_dot(d: int, q: int = 1) -> PlusMonomial:
    return PlusMonomial(zero_index(d), q)


def plus_planted(i: int, a: MultiIndex, t: Optional[DecoratedTree],
                 p: Parameters) -> Optional[PlusMonomial]:
    """``I^{+,i}_a(t)``; zero unless ``deg_i(I_a t) > 0``."""
    if t is None or t.is_monomial():
        return None
    if deg_planted(a, t, i, p) <= 0:
        return None
    return PlusMonomial(zero_index(len(a) - 1), 0, ((tuple(a), t),))


def plus_to_string(m: PlusMonomial) -> str:
    parts = []
    if any(m.poly):
        parts.append("X^" + _index_str(m.poly))
    parts.extend(["dXi"] * m.dot)
    for a, t in m.planted:
        parts.append(f"I+[{_index_str(a)}]({to_string(t)})")
    return " * ".join(parts) if parts else "1"


def plus_degree(m: PlusMonomial, i: int, p: Parameters) -> Fraction:
    out = Fraction(scaled_size(m.poly)) + m.dot * p.noise_degree(Noise.XIDOT, i)
    for a, t in m.planted:
        out += deg_planted(a, t, i, p)
    return out


def counit(m: PlusMonomial) -> int:
    return 1 if m.is_unit() else 0


# -- tensor helpers -------------------------------------------------------------

def _tensor_mul(a: LinComb, b: LinComb, left: Callable, right: Callable) -> LinComb:
    acc: dict = {}
    get = acc.get
    bs = list(b.items())
    for (la, ra), ca in a.items():
        for (lb, rb), cb in bs:
            l = left(la, lb)
            if l is None:
                continue
            k = (l, right(ra, rb))
            acc[k] = get(k, 0) + ca * cb
    out = LinComb()
    out.terms = {k: c for k, c in acc.items() if c != 0}
    return out


def _tree_tensor_mul(a: LinComb, b: LinComb) -> LinComb:
    return _tensor_mul(a, b, tree_product, operator.mul)


def _plus_tensor_mul(a: LinComb, b: LinComb) -> LinComb:
    return _tensor_mul(a, b, operator.mul, operator.mul)


def plus_lc_mul(a: LinComb, b: LinComb) -> LinComb:
    out = LinComb()
    for ma, ca in a.items():
        for mb, cb in b.items():
            out.add_term(ma * mb, ca * cb)
    return out


def _rat(num: int, den: int):
    """Exact ``num / den``; ``mpq`` keeps the inner loops fast."""
    return mpq(num, den)


def _poly_split(k: MultiIndex, left: Callable, right: Callable) -> LinComb:
    out = LinComb()
    for l in sub_indices(k):
        out.add_term((left(l), right(index_sub(k, l))), mpq(index_binomial(k, l)))
    return out


def _neg_poly_over_fact(l: MultiIndex):
    """Coefficient of ``X^l`` in ``(-X)^l / l!``."""
    return _rat((-1) ** sum(l), index_factorial(l))


# -- coaction ---------------------------------------------------------------------

@lru_cache(maxsize=None)
def coaction(i: int, t: DecoratedTree, p: Parameters) -> LinComb:
    """``Delta_i t`` as a combination of ``(tree, PlusMonomial)`` pairs."""
    d = t.dim
    if t.children:
        # peel the last planted factor; the remaining product is shared by many trees
        a, c = t.children[-1]
        rest = DecoratedTree(t.poly, t.noise, t.children[:-1])
        return _tree_tensor_mul(coaction(i, rest, p), _coaction_planted(i, a, c, p))
    acc = _poly_split(t.poly, monomial, plus_poly)
    if t.noise is Noise.XI or (t.noise is Noise.XIDOT and i != 2):
        noise_part = LinComb.single((DecoratedTree(zero_index(d), t.noise), plus_unit(d)), ONE)
        acc = _tree_tensor_mul(acc, noise_part)
    elif t.noise is Noise.XIDOT:
        noise_part = LinComb({(DecoratedTree(zero_index(d), Noise.XIDOT), plus_unit(d)): ONE,
                              (unit(d), plus_dot(d)): ONE})
        acc = _tree_tensor_mul(acc, noise_part)
    return acc


@lru_cache(maxsize=None)
def _coaction_planted(i: int, a: MultiIndex, t: DecoratedTree, p: Parameters) -> LinComb:
    d = t.dim
    out = LinComb()
    for (left, right), c in coaction(i, t, p).items():
        out.add_term((planted(a, left), right), c)
    for n in indices_below(d, deg_planted(a, t, i, p)):
        gen = plus_planted(i, index_add(a, n), t, p)
        for l in sub_indices(n):
            m = index_sub(n, l)
            coeff = _rat(1, index_factorial(l) * index_factorial(m))
            out.add_term((monomial(l), plus_poly(m) * gen), coeff)
    return out


def coaction_lc(i: int, lc: LinComb, p: Parameters) -> LinComb:
    return lc.map_keys(lambda t: coaction(i, t, p))


# -- positive coproduct -------------------------------------------------------------

@lru_cache(maxsize=None)
def _coproduct_generator(i: int, g: PlusMonomial, p: Parameters) -> LinComb:
    d = len(g.poly) - 1
    if not g.planted:
        if g.dot:
            out = LinComb()
            for r in range(g.dot + 1):
                out.add_term((plus_dot(d, r), plus_dot(d, g.dot - r)),
                             mpq(math.comb(g.dot, r)))
            return out
        return _poly_split(g.poly, plus_poly, plus_poly)
    (a, t), = g.planted
    out = LinComb.single((plus_unit(d), g), ONE)
    bound = deg_planted(a, t, i, p)
    for l in indices_below(d, bound):
        sign = _neg_poly_over_fact(l)
        for (left, right), c in coaction(i, t, p).items():
            gen = plus_planted(i, index_add(a, l), left, p)
            if gen is None:
                continue
            out.add_term((gen, plus_poly(l) * right), c * sign)
    return out


@lru_cache(maxsize=None)
def coproduct_plus(i: int, m: PlusMonomial, p: Parameters) -> LinComb:
    """``Delta^+_i m`` as a combination of ``(PlusMonomial, PlusMonomial)``."""
    d = len(m.poly) - 1
    acc = LinComb.single((plus_unit(d), plus_unit(d)), ONE)
    for g in m.generators():
        acc = _plus_tensor_mul(acc, _coproduct_generator(i, g, p))
    return acc


# -- antipode ---------------------------------------------------------------------

@lru_cache(maxsize=None)
def _antipode_generator(i: int, g: PlusMonomial, p: Parameters) -> LinComb:
    d = len(g.poly) - 1
    if not g.planted:
        sign = (-1) ** (sum(g.poly) + g.dot)
        return LinComb.single(g, mpq(sign))
    (a, t), = g.planted
    out = LinComb()
    for (left, right), c in coaction(i, t, p).items():
        if left.is_monomial():
            continue
        anti = antipode_plus(i, right, p)
        for l in indices_below(d, deg_planted(a, left, i, p)):
            gen = plus_planted(i, index_add(a, l), left, p)
            if gen is None:
                continue
            head = gen * plus_poly(l)
            coeff = -c * _rat(1, index_factorial(l))
            for mm, cc in anti.items():
                out.add_term(head * mm, coeff * cc)
    return out


@lru_cache(maxsize=None)
def antipode_plus(i: int, m: PlusMonomial, p: Parameters) -> LinComb:
    d = len(m.poly) - 1
    acc = LinComb.single(plus_unit(d), ONE)
    for g in m.generators():
        acc = plus_lc_mul(acc, _antipode_generator(i, g, p))
    return acc


def antipode_lc(i: int, lc: LinComb, p: Parameters) -> LinComb:
    return lc.map_keys(lambda m: antipode_plus(i, m, p))


# -- hatted maps ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def delta_hat(i: int, t: DecoratedTree, p: Parameters) -> LinComb:
    """``hat Delta_i`` for ``i`` in {1, 2}; primitives go to ``. (x) 1``."""
    if i not in (1, 2):
        raise ValueError(f"hat Delta is defined for variants 1 and 2, got {i}")
    d = t.dim
    if t.children:
        a, c = t.children[-1]
        rest = DecoratedTree(t.poly, t.noise, t.children[:-1])
        return _tree_tensor_mul(delta_hat(i, rest, p), _delta_hat_planted(i, a, c, p))
    acc = LinComb.single((monomial(t.poly), plus_unit(d)), ONE)
    if t.noise is Noise.XI or (t.noise is Noise.XIDOT and i == 1):
        acc = _tree_tensor_mul(acc, LinComb.single(
            (DecoratedTree(zero_index(d), t.noise), plus_unit(d)), ONE))
    elif t.noise is Noise.XIDOT:
        acc = _tree_tensor_mul(acc, LinComb({
            (DecoratedTree(zero_index(d), Noise.XIDOT), plus_unit(d)): ONE,
            (unit(d), plus_dot(d)): -ONE}))
    return acc


@lru_cache(maxsize=None)
def _delta_hat_planted(i: int, a: MultiIndex, t: DecoratedTree, p: Parameters) -> LinComb:
    d = t.dim
    inner = delta_hat(i, t, p)
    out = LinComb()
    for (left, right), c in inner.items():
        out.add_term((planted(a, left), right), c)
    low = deg_planted(a, t, 0, p)
    for (left, right), c in inner.items():
        if left.is_monomial():
            continue
        for l in indices_below(d, deg_planted(a, left, i, p)):
            if scaled_size(l) < low:
                continue
            gen = plus_planted(i, index_add(a, l), left, p)
            if gen is None:
                continue
            out.add_term((monomial(l), gen * right), -c * _rat(1, index_factorial(l)))
    return out


def delta_hat_lc(i: int, lc: LinComb, p: Parameters) -> LinComb:
    return lc.map_keys(lambda t: delta_hat(i, t, p))


def to_shifted_basis(i: int, a: MultiIndex, t: DecoratedTree,
                     p: Parameters) -> list[tuple[MultiIndex, Fraction]]:
    """Write ``I^+_a(t)`` as ``sum_l c_l X^l tilde I^+_{a+l}(t)``.

    ``tilde I^+_b(t) = sum_m X^m/m! I^+_{b+m}(t)`` is triangular in ``m``, so
    the inverse is ``sum_l (-X)^l / l! tilde I^+_{a+l}(t)``.
    """
    d = t.dim
    return [(l, _neg_poly_over_fact(l))
            for l in indices_below(d, deg_planted(a, t, i, p))]


@lru_cache(maxsize=None)
def _gamma_hat_shifted(i: int, b: MultiIndex, t: DecoratedTree, p: Parameters) -> LinComb:
    """``hat Gamma_i`` on the shifted generator ``tilde I^+_b(t)``."""
    if deg_planted(b, t, 0, p) > 0:
        return LinComb()
    out = LinComb()
    for (left, right), c in coaction(i, t, p).items():
        gen = plus_planted(i, b, left, p)
        if gen is None:
            continue
        for mm, cc in gamma_hat(i, right, p).items():
            out.add_term(gen * mm, -c * cc)
    return out


@lru_cache(maxsize=None)
def _gamma_hat_generator(i: int, g: PlusMonomial, p: Parameters) -> LinComb:
    if not g.planted:
        if any(g.poly):
            return LinComb()
        if g.dot and i != 2:
            raise ValueError("dXi is a positive generator only for variant 2")
        return LinComb.single(g, mpq((-1) ** g.dot))
    (a, t), = g.planted
    if deg_planted(a, t, i, p) <= 0:
        raise ValueError(f"I+_{a}({to_string(t)}) is not a valid generator for variant {i}")
    out = LinComb()
    for l, c in to_shifted_basis(i, a, t, p):
        if any(l):
            continue  # hat Gamma kills X^l, l != 0
        for mm, cc in _gamma_hat_shifted(i, index_add(a, l), t, p).items():
            out.add_term(mm, c * cc)
    return out


@lru_cache(maxsize=None)
def gamma_hat(i: int, m: PlusMonomial, p: Parameters) -> LinComb:
    d = len(m.poly) - 1
    acc = LinComb.single(plus_unit(d), ONE)
    for g in m.generators():
        acc = plus_lc_mul(acc, _gamma_hat_generator(i, g, p))
        if not acc:
            break
    return acc


# -- preparation maps ---------------------------------------------------------------------

@dataclass(frozen=True)
class PreparationMap:
    """Linear endomorphism of tree combinations, given on basis trees."""

    name: str
    on_tree: Callable[[DecoratedTree], LinComb]

    def __call__(self, lc: LinComb) -> LinComb:
        return lc.map_keys(self.on_tree)

    def apply_tree(self, t: DecoratedTree) -> LinComb:
        return self.on_tree(t)


IDENTITY_PREPARATION = PreparationMap("identity", lambda t: LinComb.single(t, ONE))


def prepare(R: PreparationMap, lc: LinComb) -> LinComb:
    return R(lc)


def check_preparation_map(R: PreparationMap, trees, p: Parameters,
                          variants=(0, 1, 2)) -> list[str]:
    """Return the list of violated properties (empty when ``R`` conforms)."""
    from .trees import noise_count
    problems = []
    for t in trees:
        img = R.apply_tree(t)
        fixed = t.is_monomial() or t.is_planted() or (not t.children and not any(t.poly))
        if fixed and img != LinComb.single(t, ONE):
            problems.append(f"does not fix {to_string(t)}")
        rest = img - LinComb.single(t, ONE)
        for s in rest:
            if deg(s, 0, p) < deg(t, 0, p) or noise_count(s) >= noise_count(t):
                problems.append(f"bad correction {to_string(s)} in R({to_string(t)})")
        for i in variants:
            lhs = LinComb()
            for (l, r), c in coaction(i, t, p).items():
                for s, cs in R.apply_tree(l).items():
                    lhs.add_term((s, r), c * cs)
            rhs = coaction_lc(i, img, p)
            if lhs != rhs:
                problems.append(f"(R x id) Delta_{i} != Delta_{i} R on {to_string(t)}")
        if not contains_xidot(t):
            if R(malliavin(t)) != img.map_keys(malliavin):
                problems.append(f"R D_Xi != D_Xi R on {to_string(t)}")
        single = LinComb.single(t, ONE)
        if R(q0_project(single)) != q0_project(img):
            problems.append(f"R Q0 != Q0 R on {to_string(t)}")
    return problems
