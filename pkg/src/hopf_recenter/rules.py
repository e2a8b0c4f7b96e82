"""Equation presets, enumeration of the noise-free sector and the degree assumption."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .trees import (
    DecoratedTree, MultiIndex, Noise, Parameters, contains_xidot, deg, depth, index_add,
    indices_below, malliavin, monomial, noise_count, poly_order, scaled_size, to_string,
    zero_index,
)

KAPPA = Fraction(1, 100)


@dataclass(frozen=True)
class EdgeRule:
    """Children hanging off one edge decoration; ``max_count=None`` is unbounded."""

    edge: MultiIndex
    min_count: int = 0
    max_count: Optional[int] = None


@dataclass(frozen=True)
class NodePattern:
    """Allowed shape of a root node: its noise, polynomial and child edges."""

    noise: Noise
    poly: bool
    edges: tuple[EdgeRule, ...] = ()

    def matches(self, t: DecoratedTree) -> bool:
        if t.noise is not self.noise:
            return False
        if any(t.poly) and not self.poly:
            return False
        counts: dict[MultiIndex, int] = {}
        for a, _ in t.children:
            counts[a] = counts.get(a, 0) + 1
        allowed = {r.edge for r in self.edges}
        if any(a not in allowed for a in counts):
            return False
        for r in self.edges:
            c = counts.get(r.edge, 0)
            if c < r.min_count or (r.max_count is not None and c > r.max_count):
                return False
        return True


@dataclass(frozen=True)
class RuleSet:
    name: str
    params: Parameters
    patterns: tuple[NodePattern, ...]

    def allows_node(self, t: DecoratedTree) -> bool:
        # bare polynomials belong to every model space
        if t.is_monomial():
            return True
        return any(pat.matches(t) for pat in self.patterns)

    def conforms(self, t: DecoratedTree) -> bool:
        """Whole-tree check: every node matches a pattern, every child carries noise."""
        if not self.allows_node(t):
            return False
        return all(noise_count(c) > 0 and self.conforms(c) for _, c in t.children)

    @classmethod
    def from_dict(cls, data: dict) -> RuleSet:
        d = int(data["d"])
        params = Parameters(d, Fraction(data["alpha"]), Fraction(data.get("kappa", KAPPA)))
        pats = []
        for pd in data["patterns"]:
            edges = tuple(EdgeRule(tuple(e["edge"]), int(e.get("min", 0)), e.get("max"))
                          for e in pd.get("edges", ()))
            pats.append(NodePattern(Noise[pd.get("noise", "NONE")], bool(pd.get("poly", False)),
                                    edges))
        return cls(data["name"], params, tuple(pats))


@dataclass(frozen=True)
class EnumerationCutoffs:
    max_noises: int = 2
    max_poly_order: int = 0
    max_edge_order: int = 0
    max_depth: Optional[int] = None  # defaults to max_noises
    max_total_poly: Optional[int] = None  # bound on the summed |k|_s over all nodes

    def __post_init__(self):
        for name in ("max_noises", "max_poly_order", "max_edge_order"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("max_depth", "max_total_poly"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def poly_budget(self) -> int:
        return 10 ** 9 if self.max_total_poly is None else self.max_total_poly

    def admits(self, t: DecoratedTree) -> bool:
        return (noise_count(t) <= self.max_noises and depth(t) <= self.depth_bound
                and poly_order(t) <= self.poly_budget)

    @property
    def depth_bound(self) -> int:
        return self.max_noises if self.max_depth is None else self.max_depth


def _phi4_patterns(d: int) -> tuple[NodePattern, ...]:
    e0 = zero_index(d)
    return (
        NodePattern(Noise.XI, poly=False),
        NodePattern(Noise.NONE, poly=True, edges=(EdgeRule(e0, 1, 2),)),
        NodePattern(Noise.NONE, poly=False, edges=(EdgeRule(e0, 3, 3),)),
    )


def _gkpz_patterns() -> tuple[NodePattern, ...]:
    e0, e1 = (0, 0), (0, 1)
    return (
        NodePattern(Noise.XI, poly=True, edges=(EdgeRule(e0),)),
        NodePattern(Noise.NONE, poly=True, edges=(EdgeRule(e0), EdgeRule(e1, 0, 3))),
    )


PRESET_NAMES = ("phi4-4mk", "phi4-3", "gkpz")


def preset(name: str, kappa: Fraction = KAPPA) -> RuleSet:
    kappa = Fraction(kappa)
    if name == "phi4-4mk":
        return RuleSet(name, Parameters(4, -3 + kappa, kappa), _phi4_patterns(4))
    if name == "phi4-3":
        return RuleSet(name, Parameters(3, Fraction(-5, 2) - kappa, kappa), _phi4_patterns(3))
    if name == "gkpz":
        return RuleSet(name, Parameters(1, Fraction(-3, 2) - kappa, kappa), _gkpz_patterns())
    raise KeyError(f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}")


def compute_N(p: Parameters) -> int:
    """Largest natural ``N`` with ``deg_1(dXi) + 2 - N > 0``."""
    top = p.noise_degree(Noise.XIDOT, 1) + 2
    n = math.ceil(top) - 1
    if n < 1:
        warnings.warn(f"no positive N: deg_1(dXi) + 2 = {top}", stacklevel=2)
        return 0
    return n


# -- enumeration -----------------------------------------------------------------------

def _multisets(pool: list[DecoratedTree], budget: tuple[int, int], lo: int,
               hi: Optional[int], start: int = 0):
    """Sorted tuples of pool trees within the (noise, poly) budget and size range."""
    if lo <= 0:
        yield ()
    if hi is not None and hi <= 0:
        return
    nb, pb = budget
    for j in range(start, len(pool)):
        c, q = noise_count(pool[j]), poly_order(pool[j])
        if c > nb or q > pb:
            continue
        nhi = None if hi is None else hi - 1
        for rest in _multisets(pool, (nb - c, pb - q), lo - 1, nhi, j):
            yield (pool[j],) + rest


def _children_choices(rules: tuple[EdgeRule, ...], pool, budget: tuple[int, int]):
    if not rules:
        yield ()
        return
    r, rest = rules[0], rules[1:]
    for group in _multisets(pool, budget, r.min_count, r.max_count):
        left = (budget[0] - sum(noise_count(c) for c in group),
                budget[1] - sum(poly_order(c) for c in group))
        for others in _children_choices(rest, pool, left):
            yield tuple((r.edge, c) for c in group) + others


def enumerate_T0(rs: RuleSet, cut: EnumerationCutoffs) -> list[DecoratedTree]:
    """All rule-conforming noise-free trees within the cutoffs, in canonical order."""
    d = rs.params.d
    polys = indices_below(d, Fraction(min(cut.max_poly_order, cut.poly_budget)), strict=False)
    found: set[DecoratedTree] = {monomial(k) for k in polys}
    pool: list[DecoratedTree] = []
    for _level in range(cut.depth_bound + 1):
        new: set[DecoratedTree] = set()
        for pat in rs.patterns:
            if pat.noise is Noise.XIDOT:
                continue
            own = 1 if pat.noise is Noise.XI else 0
            if own > cut.max_noises:
                continue
            edges = tuple(r for r in pat.edges if scaled_size(r.edge) <= cut.max_edge_order)
            if any(r.min_count > 0 for r in pat.edges if r not in edges):
                continue
            ks = polys if pat.poly else (zero_index(d),)
            for children in _children_choices(edges, pool,
                                              (cut.max_noises - own, cut.poly_budget)):
                used = sum(poly_order(c) for _, c in children)
                for k in ks:
                    if used + scaled_size(k) > cut.poly_budget:
                        continue
                    t = DecoratedTree(k, pat.noise, children)
                    if t not in found:
                        new.add(t)
        if not new:
            break
        found |= new
        pool = sorted((t for t in found if noise_count(t) > 0), key=canonical_key)
    return sorted(found, key=canonical_key)


def canonical_key(t: DecoratedTree):
    return (noise_count(t), depth(t), scaled_size(t.poly), t.key)


# -- assumption ---------------------------------------------------------------------------

@dataclass
class Decomposition:
    """Root splitting of ``D_Xi tau``: planted pieces ``I_a(D_Xi tau_i')`` and a root ``dXi``."""

    tree: DecoratedTree
    planted: list[tuple[MultiIndex, DecoratedTree, Fraction]]  # (a, tau_i', deg_1(D_Xi tau_i'))
    root_noise: bool


@dataclass
class AssumptionReport:
    N: int
    decompositions: list[Decomposition] = field(default_factory=list)
    violations: list[tuple[DecoratedTree, MultiIndex, MultiIndex, Fraction]] = field(
        default_factory=list)  # (tau, a, n, deg_1(I_{a+n}(D_Xi tau_i')))
    # Left legs sigma of Delta_1 D_Xi tau_i' that still carry dXi and whose shifted
    # planted degree deg_1(I_{a+n} sigma) is not positive.  The literal condition only
    # looks at sigma = D_Xi tau_i'; polynomial decorations inside tau_i' can split off
    # lower-degree pieces that the re-expansion then truncates.
    extended: list[tuple[DecoratedTree, MultiIndex, MultiIndex, DecoratedTree, Fraction]] = field(
        default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations

    @property
    def holds_extended(self) -> bool:
        return not self.violations and not self.extended

    def violating_trees(self) -> set[DecoratedTree]:
        return {v[0] for v in self.violations}

    def flagged_trees(self) -> set[DecoratedTree]:
        return self.violating_trees() | {v[0] for v in self.extended}

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "holds": self.holds,
            "violations": [
                {"tree": to_string(t), "edge": list(a), "n": list(n), "degree": str(g)}
                for t, a, n, g in self.violations
            ],
            "extended": [
                {"tree": to_string(t), "edge": list(a), "n": list(n), "leg": to_string(s),
                 "degree": str(g)}
                for t, a, n, s, g in self.extended
            ],
        }


def decompose(t: DecoratedTree, p: Parameters) -> Decomposition:
    pieces = []
    for a, c in t.children:
        dc = malliavin(c)
        if not dc:
            continue
        # every term of D_Xi c has the same degree
        g = deg(next(iter(dc)), 1, p)
        pieces.append((a, c, g))
    return Decomposition(t, pieces, t.noise is Noise.XI)


def check_assumption(rs: RuleSet, cut: EnumerationCutoffs,
                     trees: Optional[list[DecoratedTree]] = None) -> AssumptionReport:
    p = rs.params
    N = compute_N(p)
    report = AssumptionReport(N)
    if trees is None:
        trees = enumerate_T0(rs, cut)
    for t in trees:
        dec = decompose(t, p)
        report.decompositions.append(dec)
        for a, c, g in dec.planted:
            for n in indices_below(p.d, Fraction(N), strict=False):
                shifted = g + 2 - scaled_size(index_add(a, n))
                if shifted <= 0:
                    report.violations.append((t, a, n, shifted))
            for leg in _dot_legs(c, p):
                for n in indices_below(p.d, Fraction(N), strict=False):
                    g2 = deg(leg, 1, p) + 2 - scaled_size(index_add(a, n))
                    if g2 <= 0 and leg not in malliavin(c):
                        report.extended.append((t, a, n, leg, g2))
    return report


def _dot_legs(c: DecoratedTree, p: Parameters) -> list[DecoratedTree]:
    from .hopf import coaction  # local import: hopf depends on trees only
    legs = set()
    for s in malliavin(c):
        for (left, _), _coef in coaction(1, s, p).items():
            if contains_xidot(left):
                legs.add(left)
    return sorted(legs)
