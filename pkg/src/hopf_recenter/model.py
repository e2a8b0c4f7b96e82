"""Models, characters, re-expansion and the recentering map ``dGamma``.

Everything analytic is evaluated with ``SmoothFunction``; tree combinations
returned from this module carry float coefficients.  A ``ModelContext`` owns
its memo tables, so one context should be used by one worker at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .hopf import (
    IDENTITY_PREPARATION, PlusMonomial, PreparationMap, antipode_plus, coaction,
    coproduct_plus, delta_hat,
)
from .lincomb import LinComb
from .smooth import DEFAULT_MULTIPLIER, Multiplier, SmoothFunction, apply_J, linear_combination
from .trees import (
    DecoratedTree, MultiIndex, Noise, Parameters, contains_xidot, deg_planted, index_add,
    index_binomial, index_factorial, index_sub, indices_below, lc_product, malliavin,
    monomial, planted, sub_indices,
    q0_interior_project, q0_project, root_factors, scaled_size, symmetry_factor, to_string,
    unit, xidot,
)

Point = tuple[float, ...]

PROJECTIONS = ("interior", "literal")


def as_point(x: Sequence[float]) -> Point:
    return tuple(float(v) for v in x)


class BasisNotClosedError(ValueError):
    def __init__(self, escaping: list[DecoratedTree]):
        self.escaping = escaping
        names = ", ".join(to_string(t) for t in escaping[:8])
        super().__init__(f"dGamma maps outside the basis: {names}"
                         + (" ..." if len(escaping) > 8 else ""))


@dataclass
class ModelContext:
    params: Parameters
    xi: SmoothFunction
    dxi: SmoothFunction
    multiplier: Multiplier = DEFAULT_MULTIPLIER
    prep: PreparationMap = IDENTITY_PREPARATION
    projection: str = "interior"
    _pre: dict = field(default_factory=dict, repr=False)
    _model: dict = field(default_factory=dict, repr=False)
    _jet: dict = field(default_factory=dict, repr=False)
    _f: dict = field(default_factory=dict, repr=False)
    _gamma: dict = field(default_factory=dict, repr=False)
    _rec: dict = field(default_factory=dict, repr=False)
    _reexp: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.projection not in PROJECTIONS:
            raise ValueError(f"projection must be one of {PROJECTIONS}")
        dim = self.params.d + 1
        if self.xi.dim != dim or self.dxi.dim != dim:
            raise ValueError("noise dimension does not match d + 1")

    @property
    def dim(self) -> int:
        return self.params.d + 1

    def clear_caches(self) -> None:
        for c in (self._pre, self._model, self._jet, self._f, self._gamma, self._rec,
                  self._reexp):
            c.clear()

    def J(self, a: MultiIndex, f: SmoothFunction) -> SmoothFunction:
        return apply_J(a, f, self.multiplier)

    def project(self, lc: LinComb) -> LinComb:
        return q0_interior_project(lc) if self.projection == "interior" else q0_project(lc)


# -- pre-model and models ---------------------------------------------------------------------

def _seed(ctx: ModelContext, noise: Noise, variant: Optional[int], x: Optional[Point]):
    if noise is Noise.XI:
        return ctx.xi
    if variant == 2:
        return ctx.dxi - ctx.dxi.evaluate(x)
    return ctx.dxi


def pre_model(ctx: ModelContext, t: Optional[DecoratedTree]) -> SmoothFunction:
    """Non-recentred ``tilde Pi t = tilde Pi^x R t``."""
    if t is None:
        return SmoothFunction.zero(ctx.dim)
    hit = ctx._pre.get(t)
    if hit is not None:
        return hit
    out = linear_combination(ctx.dim, ((_pre_mult(ctx, s), float(c))
                                       for s, c in ctx.prep.apply_tree(t).items()))
    ctx._pre[t] = out
    return out


def _pre_mult(ctx: ModelContext, t: DecoratedTree) -> SmoothFunction:
    out = SmoothFunction.monomial(t.poly)
    if t.noise is not Noise.NONE:
        out = out * _seed(ctx, t.noise, None, None)
    for a, c in t.children:
        out = out * ctx.J(a, pre_model(ctx, c))
    return out


def model(ctx: ModelContext, i: int, x: Sequence[float], t: Optional[DecoratedTree]) -> SmoothFunction:
    """``Pi^i_x t``, recentred at ``x``."""
    if t is None:
        return SmoothFunction.zero(ctx.dim)
    x = as_point(x)
    key = (i, x, t)
    hit = ctx._model.get(key)
    if hit is not None:
        return hit
    out = linear_combination(ctx.dim, ((model_mult(ctx, i, x, s), float(c))
                                       for s, c in ctx.prep.apply_tree(t).items()))
    ctx._model[key] = out
    return out


def model_lc(ctx: ModelContext, i: int, x: Sequence[float], lc: LinComb) -> SmoothFunction:
    return linear_combination(ctx.dim, ((model(ctx, i, x, t), float(c)) for t, c in lc.items()))


def model_mult(ctx: ModelContext, i: int, x: Point, t: DecoratedTree) -> SmoothFunction:
    """Multiplicative part ``Pi^{i,x}_x`` on one tree (no preparation map at the root)."""
    out = SmoothFunction.shifted_monomial(t.poly, x)
    if t.noise is not Noise.NONE:
        out = out * _seed(ctx, t.noise, i, x)
    for a, c in t.children:
        out = out * planted_model(ctx, i, x, a, c)
    return out


def planted_model(ctx: ModelContext, i: int, x: Point, a: MultiIndex,
                  t: DecoratedTree) -> SmoothFunction:
    pieces = [(ctx.J(a, model(ctx, i, x, t)), 1.0)]
    for k in indices_below(ctx.params.d, deg_planted(a, t, i, ctx.params)):
        v = jet(ctx, i, x, index_add(a, k), t)
        pieces.append((SmoothFunction.shifted_monomial(k, x), -v / index_factorial(k)))
    return linear_combination(ctx.dim, pieces)


def jet(ctx: ModelContext, i: int, x: Sequence[float], a: MultiIndex, t: DecoratedTree) -> float:
    """``(d^a K * Pi^i_x t)(x)`` with ``K *`` realised by the multiplier."""
    x = as_point(x)
    key = (i, x, a, t)
    hit = ctx._jet.get(key)
    if hit is None:
        hit = ctx.J(a, model(ctx, i, x, t)).evaluate(x)
        ctx._jet[key] = hit
    return hit


# -- characters ------------------------------------------------------------------------------------
#
# A character is named by a key: ("f", x) is f_x, ("g", x) is f_x composed with the
# antipode, ("gamma", x, y) is gamma_{xy}, ("fhat", x) is f_x composed with hat Gamma.
# All are multiplicative, so each is fixed by its values on X_j, dXi and I^+_b(t).
# ``expand`` computes (id (x) phi) Delta_i t factor by factor, which avoids ever
# materialising the full coaction of a product tree.

CharKey = tuple


def f_char(ctx: ModelContext, i: int, x: Sequence[float], m: PlusMonomial) -> float:
    """``f^i_x(m)``: ``f(X_j) = -x_j``, ``f(I^+_a t) = -(d^a K * Pi^i_x t)(x)``."""
    return char_value(ctx, i, ("f", as_point(x)), m)


def f_char_lc(ctx: ModelContext, i: int, x: Sequence[float], lc: LinComb) -> float:
    return sum(float(c) * f_char(ctx, i, x, m) for m, c in lc.items())


def gamma_char(ctx: ModelContext, i: int, x: Sequence[float], y: Sequence[float],
               m: PlusMonomial) -> float:
    """``gamma^i_{xy}(m) = (f_x A (x) f_y) Delta^+_i m``."""
    return char_value(ctx, i, ("gamma", as_point(x), as_point(y)), m)


def char_value(ctx: ModelContext, i: int, phi: CharKey, m: PlusMonomial) -> float:
    key = (i, phi, m)
    hit = ctx._f.get(key)
    if hit is not None:
        return hit
    val = _char_poly(phi, m.poly)
    if m.dot and val:
        val *= _char_dot(ctx, phi) ** m.dot
    for a, t in m.planted:
        if not val:
            break
        val *= char_planted(ctx, i, phi, a, t)
    ctx._f[key] = val
    return val


def _char_poly(phi: CharKey, k: MultiIndex) -> float:
    kind = phi[0]
    if kind == "fhat":
        return 0.0 if any(k) else 1.0
    val = 1.0
    for j, kj in enumerate(k):
        if kj:
            if kind == "f":
                base = -phi[1][j]
            elif kind == "g":
                base = phi[1][j]
            else:
                base = phi[1][j] - phi[2][j]
            val *= base ** kj
    return val


def _char_dot(ctx: ModelContext, phi: CharKey) -> float:
    kind = phi[0]
    if kind == "f":
        return -ctx.dxi.evaluate(phi[1])
    if kind in ("g", "fhat"):
        return ctx.dxi.evaluate(phi[1])
    return ctx.dxi.evaluate(phi[1]) - ctx.dxi.evaluate(phi[2])


def char_planted(ctx: ModelContext, i: int, phi: CharKey, b: MultiIndex,
                 t: DecoratedTree) -> float:
    """Value of the character on the generator ``I^{+,i}_b(t)`` (zero when not positive)."""
    p = ctx.params
    if t.is_monomial() or deg_planted(b, t, i, p) <= 0:
        return 0.0
    key = (i, phi, b, t)
    hit = ctx._gamma.get(key)
    if hit is not None:
        return hit
    kind = phi[0]
    if kind == "f":
        val = -jet(ctx, i, phi[1], b, t)
    elif kind == "g":
        # f_x(A I^+_b t) = -sum_{t1} E_g(t)[t1] sum_l f_x(I^+_{b+l} t1) (-x)^l / l!
        x = phi[1]
        val = 0.0
        for t1, c in expand(ctx, i, phi, t).items():
            for l in indices_below(p.d, deg_planted(b, t1, i, p)) if not t1.is_monomial() else ():
                val -= c * char_planted(ctx, i, ("f", x), index_add(b, l), t1) \
                    * _char_poly(("f", x), l) / index_factorial(l)
    elif kind == "gamma":
        x, y = phi[1], phi[2]
        val = char_planted(ctx, i, ("f", y), b, t)
        fy = expand(ctx, i, ("f", y), t)
        for l in indices_below(p.d, deg_planted(b, t, i, p)):
            weight = _char_poly(("g", y), l) / index_factorial(l)  # y^l / l!
            for t1, c in fy.items():
                v = char_planted(ctx, i, ("g", x), index_add(b, l), t1)
                if v:
                    val += weight * c * v
    elif kind == "fhat":
        # only the l = 0 shifted generator survives hat Gamma (it kills X^l, l != 0)
        x = phi[1]
        val = 0.0
        if deg_planted(b, t, 0, p) <= 0:
            for t1, c in expand(ctx, i, phi, t).items():
                val -= c * char_planted(ctx, i, ("f", x), b, t1)
    else:
        raise ValueError(f"unknown character {kind!r}")
    ctx._gamma[key] = val
    return val


def expand(ctx: ModelContext, i: int, phi: CharKey, t: DecoratedTree) -> LinComb:
    """``(id (x) phi) Delta_i t`` with float coefficients, computed multiplicatively."""
    key = (i, phi, t)
    hit = ctx._reexp.get(key)
    if hit is not None:
        return hit
    d = ctx.params.d
    factors = root_factors(t)
    if len(factors) > 1:
        out = LinComb.single(unit(d), 1.0)
        for f in factors:
            out = lc_product(out, expand(ctx, i, phi, f))
    elif not factors:
        out = LinComb.single(t, 1.0)
    elif t.is_monomial():
        out = LinComb()
        for l in sub_indices(t.poly):
            out.add_term(monomial(l), index_binomial(t.poly, l)
                         * _char_poly(phi, index_sub(t.poly, l)))
    elif t.noise is Noise.XI or (t.noise is Noise.XIDOT and i != 2):
        out = LinComb.single(t, 1.0)
    elif t.noise is Noise.XIDOT:
        out = LinComb({t: 1.0, unit(d): _char_dot(ctx, phi)})
    else:
        (a, s), = t.children
        out = plant_lc(a, expand(ctx, i, phi, s))
        for n in indices_below(d, deg_planted(a, s, i, ctx.params)):
            top = char_planted(ctx, i, phi, index_add(a, n), s)
            if not top:
                continue
            for l in sub_indices(n):
                m = index_sub(n, l)
                out.add_term(monomial(l), top * _char_poly(phi, m)
                             / (index_factorial(l) * index_factorial(m)))
    ctx._reexp[key] = out
    return out


def expand_lc(ctx: ModelContext, i: int, phi: CharKey, lc: LinComb) -> LinComb:
    out = LinComb()
    for t, c in lc.items():
        for s, v in expand(ctx, i, phi, t).items():
            out.add_term(s, float(c) * v)
    return out


def reexpand(ctx: ModelContext, i: int, x: Sequence[float], y: Sequence[float],
             t: DecoratedTree) -> LinComb:
    """``Gamma^i_{xy} t = (id (x) gamma_{xy}) Delta_i t``."""
    return expand(ctx, i, ("gamma", as_point(x), as_point(y)), t).copy()


def reexpand_lc(ctx: ModelContext, i: int, x, y, lc: LinComb) -> LinComb:
    return expand_lc(ctx, i, ("gamma", as_point(x), as_point(y)), lc)


# Reference implementations through the exact coproducts; slow but independent.

def gamma_char_exact(ctx: ModelContext, i: int, x, y, m: PlusMonomial) -> float:
    val = 0.0
    for (l, r), c in coproduct_plus(i, m, ctx.params).items():
        left = f_char_lc(ctx, i, x, antipode_plus(i, l, ctx.params))
        if left:
            val += float(c) * left * f_char(ctx, i, y, r)
    return val


def reexpand_exact(ctx: ModelContext, i: int, x, y, t: DecoratedTree) -> LinComb:
    out = LinComb()
    for (s, m), c in coaction(i, t, ctx.params).items():
        out.add_term(s, float(c) * gamma_char_exact(ctx, i, x, y, m))
    return out


def j_poly(ctx: ModelContext, i: int, x: Sequence[float], a: MultiIndex,
           t: DecoratedTree) -> LinComb:
    """``J^i_a(x) t = sum_{|k|_s < deg_i(I_a t)} jet(a + k) X^k / k!``."""
    out = LinComb()
    if t.is_monomial():
        return out  # I_a(X^k) = 0
    for k in indices_below(ctx.params.d, deg_planted(a, t, i, ctx.params)):
        out.add_term(monomial(k), jet(ctx, i, x, index_add(a, k), t) / index_factorial(k))
    return out


def j_poly_lc(ctx: ModelContext, i: int, x, a: MultiIndex, lc: LinComb) -> LinComb:
    return lc.map_keys(lambda t: j_poly(ctx, i, x, a, t))


def plant_lc(a: MultiIndex, lc: LinComb) -> LinComb:
    return lc.map_keys(lambda t: planted(a, t))


def delta_model(ctx: ModelContext, x: Sequence[float], t: DecoratedTree) -> SmoothFunction:
    """``delta Pi^0_x t = Pi^0_x D_Xi t``."""
    return model_lc(ctx, 0, x, malliavin(t))


# -- recentering map ----------------------------------------------------------------------------

def hat_expand(ctx: ModelContext, i: int, x: Point, t: DecoratedTree) -> LinComb:
    """``(id (x) f^i_x) hat Delta_i t``, multiplicative over root factors."""
    key = ("hat", i, x, t)
    hit = ctx._reexp.get(key)
    if hit is not None:
        return hit
    p = ctx.params
    d = p.d
    factors = root_factors(t)
    if len(factors) > 1:
        out = LinComb.single(unit(d), 1.0)
        for f in factors:
            out = lc_product(out, hat_expand(ctx, i, x, f))
    elif not factors or t.is_monomial() or t.noise is Noise.XI:
        out = LinComb.single(t, 1.0)
    elif t.noise is Noise.XIDOT:
        out = LinComb.single(t, 1.0)
        if i == 2:
            out.add_term(unit(d), -_char_dot(ctx, ("f", x)))
    else:
        (a, s), = t.children
        inner = hat_expand(ctx, i, x, s)
        out = plant_lc(a, inner)
        low = deg_planted(a, s, 0, p)
        for left, c in inner.items():
            if left.is_monomial():
                continue
            for l in indices_below(d, deg_planted(a, left, i, p)):
                if scaled_size(l) < low:
                    continue
                v = char_planted(ctx, i, ("f", x), index_add(a, l), left)
                if v:
                    out.add_term(monomial(l), -c * v / index_factorial(l))
    ctx._reexp[key] = out
    return out


def dgamma1(ctx: ModelContext, y, x, t: DecoratedTree, projection: Optional[str] = None) -> LinComb:
    """``dGamma^1_{yx} t = Q0 (Gamma^1_{yx} (x) f^1_x) hat Delta_1 D_Xi t``."""
    y, x = as_point(y), as_point(x)
    hat = LinComb()
    for s, c in malliavin(t).items():
        for r, v in hat_expand(ctx, 1, x, s).items():
            hat.add_term(r, float(c) * v)
    out = reexpand_lc(ctx, 1, y, x, hat)
    mode = projection or ctx.projection
    return q0_interior_project(out) if mode == "interior" else q0_project(out)


def dgamma2(ctx: ModelContext, y, x, t: DecoratedTree) -> LinComb:
    """``dGamma^2_{yx} t = (Gamma^2_{yx} (x) f^2_x) hat Delta_2 D_Xi t``."""
    y, x = as_point(y), as_point(x)
    hat = LinComb()
    for s, c in malliavin(t).items():
        for r, v in hat_expand(ctx, 2, x, s).items():
            hat.add_term(r, float(c) * v)
    return reexpand_lc(ctx, 2, y, x, hat)


def dgamma_exact(ctx: ModelContext, i: int, y, x, t: DecoratedTree,
                 projection: Optional[str] = None) -> LinComb:
    """Same map through the exact ``hat Delta_i`` and coaction (reference path)."""
    out = LinComb()
    for s, c in malliavin(t).items():
        for (l, m), v in delta_hat(i, s, ctx.params).items():
            f = f_char(ctx, i, x, m)
            if f:
                for r, cr in reexpand_exact(ctx, i, y, x, l).items():
                    out.add_term(r, float(c * v) * f * cr)
    if i == 2:
        return out
    mode = projection or ctx.projection
    return q0_interior_project(out) if mode == "interior" else q0_project(out)


def dgamma1_gammahat_form(ctx: ModelContext, y, x, t: DecoratedTree,
                          projection: Optional[str] = None) -> LinComb:
    """``Q0 (Gamma^1_{yx} (x) f^1_x hat Gamma_1) Delta_1 D_Xi t``."""
    y, x = as_point(y), as_point(x)
    lc = LinComb()
    for s, c in malliavin(t).items():
        for r, v in expand(ctx, 1, ("fhat", x), s).items():
            lc.add_term(r, float(c) * v)
    out = reexpand_lc(ctx, 1, y, x, lc)
    mode = projection or ctx.projection
    return q0_interior_project(out) if mode == "interior" else q0_project(out)


def poly_projection(lc: LinComb, eta: Fraction) -> LinComb:
    """``P_eta``: keep the polynomial terms ``X^k`` with ``|k|_s < eta``."""
    return lc.filter(lambda t: t.is_monomial() and scaled_size(t.poly) < eta)


def dgamma2_rec(ctx: ModelContext, y, x, t: DecoratedTree, gamma_order: str = "yx") -> LinComb:
    """The inductive form of ``dGamma^2_{yx}``.

    ``gamma_order`` picks the re-expansion in the subtracted planted term:
    ``"yx"`` uses ``Gamma_{yx}``, ``"xy"`` uses ``Gamma_{xy}``.
    """
    y, x = as_point(y), as_point(x)
    key = (y, x, t, gamma_order)
    hit = ctx._rec.get(key)
    if hit is not None:
        return hit
    factors = root_factors(t)
    if len(factors) > 1:
        out = LinComb()
        images = [reexpand(ctx, 2, y, x, f) for f in factors]
        for j, f in enumerate(factors):
            term = dgamma2_rec(ctx, y, x, f, gamma_order)
            if not term:
                continue
            for i2, img in enumerate(images):
                if i2 != j:
                    term = lc_product(term, img)
            out = out + term
    elif not factors or t.is_monomial():
        out = LinComb()
    elif t.noise is Noise.XI:
        out = LinComb({xidot(ctx.params.d): 1.0, unit(ctx.params.d): ctx.dxi.evaluate(y)})
    elif t.is_planted():
        (a, s), = t.children
        inner = dgamma2_rec(ctx, y, x, s, gamma_order)
        out = plant_lc(a, inner) + j_poly_lc(ctx, 2, y, a, inner)
        eta = deg_planted(a, s, 0, ctx.params)
        local = poly_projection(j_poly_lc(ctx, 2, x, a, dgamma2_rec(ctx, x, x, s, gamma_order)),
                                eta)
        first, second = (y, x) if gamma_order == "yx" else (x, y)
        out = out - reexpand_lc(ctx, 2, first, second, local)
    else:
        raise ValueError(f"dGamma^2 recursion not defined on {to_string(t)}")
    ctx._rec[key] = out
    return out


# -- adjoint --------------------------------------------------------------------------------------

@dataclass
class AdjointResult:
    basis: list[DecoratedTree]
    matrix: np.ndarray  # M[row, col] = coefficient of basis[row] in dGamma^1 basis[col]
    adjoint: np.ndarray  # M*[row, col], the S-weighted transpose
    domain: list[int]  # columns on which dGamma^1 was evaluated


def dgamma1_adjoint(ctx: ModelContext, y, x, basis: list[DecoratedTree]) -> AdjointResult:
    index = {t: j for j, t in enumerate(basis)}
    n = len(basis)
    M = np.zeros((n, n))
    escaping: list[DecoratedTree] = []
    domain = []
    for col, t in enumerate(basis):
        if contains_xidot(t):
            continue  # dGamma^1 is defined on the noise-free sector
        domain.append(col)
        for s, c in dgamma1(ctx, y, x, t).items():
            row = index.get(s)
            if row is None:
                escaping.append(s)
            else:
                M[row, col] = c
    if escaping:
        raise BasisNotClosedError(sorted(set(escaping)))
    S = np.array([float(symmetry_factor(t)) for t in basis])
    return AdjointResult(list(basis), M, weighted_transpose(M, S), domain)


def weighted_transpose(M: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``M*[s, t] = M[t, s] S(t) / S(s)``, the adjoint for ``<t, s> = 1_{t=s} S(t)``."""
    return M.T * S[None, :] / S[:, None]


def close_basis(ctx: ModelContext, y, x, seeds: list[DecoratedTree],
                limit: int = 500) -> list[DecoratedTree]:
    """Smallest superset of ``seeds`` closed under the support of ``dGamma^1``."""
    seen = list(dict.fromkeys(seeds))
    members = set(seen)
    j = 0
    while j < len(seen):
        t = seen[j]
        j += 1
        if contains_xidot(t):
            continue
        for s in dgamma1(ctx, y, x, t):
            if s not in members:
                if len(seen) >= limit:
                    raise BasisNotClosedError([s])
                members.add(s)
                seen.append(s)
    return seen
