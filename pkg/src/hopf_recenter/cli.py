"""Command line entry point: ``hopf-recenter <subcommand> ...``.

Exit codes: 0 on success, 1 when a verification check fails, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

from .hopf import (
    PlusMonomial, antipode_plus, coaction, coproduct_plus, delta_hat, plus_planted,
    plus_to_string,
)
from .lincomb import LinComb
from .model import ModelContext, dgamma1, dgamma2, model, pre_model
from .rules import (
    KAPPA, PRESET_NAMES, EnumerationCutoffs, RuleSet, check_assumption, compute_N,
    enumerate_T0, preset,
)
from .trees import (
    DecoratedTree, Parameters, TreeSyntaxError, deg, malliavin, parse_tree, symmetry_factor,
    to_string,
)
from .verify import (
    SCHEMA, SUITES, SuiteConfig, example_reconciliation, make_context, run_suites,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


# -- config ------------------------------------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational number: {text!r}") from exc


def _opt_int(text: str) -> Optional[int]:
    return None if text.lower() in ("none", "") else int(text)


def _point(text: str, dim: int) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise InputError(f"not a point: {text!r}") from exc
    if len(vals) != dim:
        raise InputError(f"point needs {dim} coordinates, got {len(vals)}")
    return vals


def rule_set(args) -> RuleSet:
    if getattr(args, "rules_file", None):
        with open(args.rules_file, encoding="utf-8") as fh:
            rs = RuleSet.from_dict(json.load(fh))
    else:
        rs = preset(args.preset, _rational(args.kappa) if args.kappa else KAPPA)
    if args.d is None and args.alpha is None:
        return rs
    d = rs.params.d if args.d is None else int(args.d)
    alpha = rs.params.alpha if args.alpha is None else _rational(args.alpha)
    try:
        params = Parameters(d, alpha, rs.params.kappa)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if d != rs.params.d:
        raise InputError("changing d needs a rules file whose edge indices match")
    return RuleSet(rs.name, params, rs.patterns)


def cutoffs(args) -> EnumerationCutoffs:
    try:
        return EnumerationCutoffs(args.max_noises, args.max_poly, args.max_edge,
                                  _opt_int(str(args.max_depth)),
                                  _opt_int(str(args.max_total_poly)))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def suite_config(args) -> SuiteConfig:
    try:
        return SuiteConfig(
            preset=args.preset, max_noises=args.max_noises, max_poly_order=args.max_poly,
            max_edge_order=args.max_edge, max_depth=_opt_int(str(args.max_depth)),
            max_total_poly=_opt_int(str(args.max_total_poly)), pairs=args.pairs,
            model_pairs=args.model_pairs,
            seed=args.seed, num_tol=args.num_tol, thm_tol=args.thm_tol,
            projection=args.projection)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


# -- formatting ----------------------------------------------------------------------------------

def _coef(c) -> str:
    return str(c) if not isinstance(c, float) else repr(c)


def _label(k) -> str:
    if isinstance(k, DecoratedTree):
        return to_string(k)
    if isinstance(k, PlusMonomial):
        return plus_to_string(k)
    return " (x) ".join(_label(v) for v in k)


def _sorted_terms(lc: LinComb):
    return sorted(lc.items(), key=lambda kv: _label(kv[0]))


def _lc_json(lc: LinComb) -> list[dict]:
    out = []
    for k, c in _sorted_terms(lc):
        entry = {"coeff": str(c) if not isinstance(c, float) else c}
        if isinstance(k, tuple):
            entry["left"], entry["right"] = _label(k[0]), _label(k[1])
            if len(k) > 2:
                entry["right"] = " (x) ".join(_label(v) for v in k[1:])
        else:
            entry["tree"] = _label(k)
        out.append(entry)
    return out


class Output:
    def __init__(self, args):
        self.json_target = args.json
        self.seed = args.seed

    def emit(self, payload: dict, text: str) -> None:
        if self.json_target is None:
            print(f"# seed={self.seed}")
            print(text)
            return
        body = json.dumps({"schema": SCHEMA, "seed": self.seed, **payload}, indent=2,
                          sort_keys=True)
        if self.json_target == "-":
            print(body)
        else:
            with open(self.json_target, "w", encoding="utf-8") as fh:
                fh.write(body + "\n")
            print(f"# seed={self.seed}")
            print(text)


def _lc_text(lc: LinComb) -> str:
    if not lc:
        return "0"
    return "\n".join(f"{_coef(c):>24}  {_label(k)}" for k, c in _sorted_terms(lc))


# -- plus-monomial parsing ------------------------------------------------------------------------

def parse_plus(text: str, i: int, p: Parameters) -> PlusMonomial:
    """Parse ``X^(k) * dXi * I+[(a)](t)`` style products of positive generators."""
    out = PlusMonomial(tuple([0] * (p.d + 1)))
    for part in _split_top(text):
        part = part.strip()
        if part in ("1", ""):
            continue
        if part == "dXi":
            out = out * PlusMonomial(tuple([0] * (p.d + 1)), 1)
        elif part.startswith("X^"):
            out = out * PlusMonomial(parse_tree(part, p.d).poly)
        elif part.startswith("I+"):
            rest = part[2:]
            a = tuple([0] * (p.d + 1))
            if rest.startswith("["):
                close = rest.index("]")
                a = parse_tree("X^" + rest[1:close], p.d).poly
                rest = rest[close + 1:]
            if not (rest.startswith("(") and rest.endswith(")")):
                raise InputError(f"expected I+[(a)](tree), got {part!r}")
            g = plus_planted(i, a, parse_tree(rest[1:-1], p.d), p)
            if g is None:
                raise InputError(f"{part} is not a positive generator for variant {i}")
            out = out * g
        else:
            raise InputError(f"unknown positive factor {part!r}")
    return out


def _split_top(text: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for j, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "*" and depth == 0:
            parts.append(text[start:j])
            start = j + 1
    parts.append(text[start:])
    return parts


# -- subcommands -------------------------------------------------------------------------------------

def _kappa_form(t: DecoratedTree, variant: int, args, rs: RuleSet):
    """Split a preset degree as ``c0 + c1 kappa`` by re-evaluating at ``2 kappa``."""
    if args.rules_file or args.alpha is not None or args.d is not None:
        return None
    k = rs.params.kappa
    other = preset(args.preset, 2 * k).params
    g1, g2 = deg(t, variant, rs.params), deg(t, variant, other)
    c1 = (g2 - g1) / k
    return g1 - c1 * k, c1


def _show_form(c0: Fraction, c1: Fraction, kappa) -> tuple[str, str]:
    """``("2-k", "2-1/100")`` style symbolic and substituted forms."""
    if c1 == 0:
        return str(c0), str(c0)
    sign = "+" if c1 > 0 else "-"
    coef = "" if abs(c1) == 1 else str(abs(c1))
    lead = str(c0) if c0 else ("" if c1 > 0 else "-")
    sep = sign if c0 else ""
    return f"{lead}{sep}{coef}k", f"{lead}{sep}{abs(c1) * kappa}"


def cmd_parse(args, out: Output, rs: RuleSet) -> int:
    t = parse_tree(args.tree, rs.params.d)
    s = to_string(t)
    out.emit({"tree": s}, s)
    return EXIT_OK


def cmd_deg(args, out: Output, rs: RuleSet) -> int:
    t = parse_tree(args.tree, rs.params.d)
    variants = [args.variant] if args.variant is not None else [0, 1, 2]
    rows, lines = [], []
    for v in variants:
        g = deg(t, v, rs.params)
        split = _kappa_form(t, v, args, rs)
        symbolic, numeric = _show_form(*split, rs.params.kappa) if split else (None, None)
        rows.append({"variant": v, "degree": str(g), "kappa_form": symbolic})
        shown = f"{numeric} = {g}" if numeric and numeric != str(g) else str(g)
        lines.append(f"deg_{v}({to_string(t)}) = {shown}")
    out.emit({"tree": to_string(t), "kappa": str(rs.params.kappa), "degrees": rows},
             "\n".join(lines))
    return EXIT_OK


def cmd_sym(args, out: Output, rs: RuleSet) -> int:
    t = parse_tree(args.tree, rs.params.d)
    s = symmetry_factor(t)
    out.emit({"tree": to_string(t), "symmetry": s}, f"S({to_string(t)}) = {s}")
    return EXIT_OK


def cmd_dxi(args, out: Output, rs: RuleSet) -> int:
    t = parse_tree(args.tree, rs.params.d)
    try:
        lc = malliavin(t)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out.emit({"tree": to_string(t), "terms": _lc_json(lc)}, _lc_text(lc))
    return EXIT_OK


def cmd_coaction(args, out: Output, rs: RuleSet) -> int:
    t = parse_tree(args.tree, rs.params.d)
    lc = coaction(args.variant, t, rs.params)
    out.emit({"tree": to_string(t), "variant": args.variant, "terms": _lc_json(lc)},
             _lc_text(lc))
    return EXIT_OK


def cmd_deltahat(args, out: Output, rs: RuleSet) -> int:
    t = parse_tree(args.tree, rs.params.d)
    if args.variant not in (1, 2):
        raise InputError("deltahat needs --variant 1 or 2")
    lc = delta_hat(args.variant, t, rs.params)
    out.emit({"tree": to_string(t), "variant": args.variant, "terms": _lc_json(lc)},
             _lc_text(lc))
    return EXIT_OK


def cmd_coproduct(args, out: Output, rs: RuleSet) -> int:
    m = parse_plus(args.monomial, args.variant, rs.params)
    lc = coproduct_plus(args.variant, m, rs.params)
    out.emit({"monomial": plus_to_string(m), "variant": args.variant, "terms": _lc_json(lc)},
             _lc_text(lc))
    return EXIT_OK


def cmd_antipode(args, out: Output, rs: RuleSet) -> int:
    m = parse_plus(args.monomial, args.variant, rs.params)
    lc = antipode_plus(args.variant, m, rs.params)
    out.emit({"monomial": plus_to_string(m), "variant": args.variant, "terms": _lc_json(lc)},
             _lc_text(lc))
    return EXIT_OK


def cmd_rules(args, out: Output, rs: RuleSet) -> int:
    cut = cutoffs(args)
    trees = enumerate_T0(rs, cut)
    payload = {"preset": rs.name, "N": compute_N(rs.params), "count": len(trees),
               "trees": [to_string(t) for t in trees],
               "degrees": {to_string(t): [str(deg(t, i, rs.params)) for i in (0, 1, 2)]
                           for t in trees}}
    lines = [f"{len(trees)} trees, N = {payload['N']}"] + payload["trees"]
    if args.assumption:
        rep = check_assumption(rs, cut, trees)
        payload["assumption"] = rep.to_json()
        lines.append(f"assumption holds: {rep.holds} "
                     f"({len(rep.violations)} literal, {len(rep.extended)} extended violations)")
    out.emit(payload, "\n".join(lines))
    return EXIT_OK


def _context(args, rs: RuleSet) -> ModelContext:
    cfg = SuiteConfig(preset=rs.name if rs.name in PRESET_NAMES else "gkpz", seed=args.seed,
                      projection=args.projection)
    return make_context(cfg, rs)


def cmd_model(args, out: Output, rs: RuleSet) -> int:
    dim = rs.params.d + 1
    ctx = _context(args, rs)
    action = args.model_action
    if action == "dgamma":
        return cmd_dgamma(args, out, rs, ctx)
    t = parse_tree(args.tree, rs.params.d)
    if action == "premodel":
        f = pre_model(ctx, t)
        base = None
    else:
        base = _point(args.base, dim)
        f = model(ctx, args.variant, base, t)
    payload = {"tree": to_string(t), "action": action, "terms": f.to_json()}
    lines = [f"{len(f)} terms"]
    if args.at:
        z = _point(args.at, dim)
        val = f.evaluate(z)
        payload["at"], payload["value"] = list(z), val
        lines.append(f"value at {args.at}: {val!r}")
    if base is not None:
        payload["base"] = list(base)
    out.emit(payload, "\n".join(lines))
    return EXIT_OK


def cmd_dgamma(args, out: Output, rs: RuleSet, ctx: Optional[ModelContext] = None) -> int:
    dim = rs.params.d + 1
    ctx = ctx or _context(args, rs)
    t = parse_tree(args.tree, rs.params.d)
    y, x = _point(args.y, dim), _point(args.x, dim)
    if args.variant == 1:
        lc = dgamma1(ctx, y, x, t)
    elif args.variant == 2:
        lc = dgamma2(ctx, y, x, t)
    else:
        raise InputError("dgamma needs --variant 1 or 2")
    payload = {"tree": to_string(t), "variant": args.variant, "y": list(y), "x": list(x),
               "terms": [{"tree": to_string(s), "coeff": c} for s, c in _sorted_terms(lc)]}
    out.emit(payload, _lc_text(lc))
    return EXIT_OK


def cmd_verify(args, out: Output, rs: RuleSet) -> int:
    cfg = suite_config(args)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    payload: dict = {"preset": cfg.preset}
    text = []
    if args.suite == "example":
        rep = example_reconciliation(cfg)
        payload["example"] = rep
        for key in ("dgamma1", "dgamma2"):
            part = rep[key]
            text.append(f"{key}: printed display matches the definition: {part['all_match']}")
            for row in part["coefficients"]:
                text.append(f"  {row['tree']:12} printed={row['printed']!r} "
                            f"definition={row['definition']!r} match={row['match']}")
            for label, res in part["characterization"].items():
                verdict = all(r["passes"] for r in res)
                text.append(f"  derivative characterization with {label} value: "
                            f"{'holds' if verdict else 'fails'}")
        out.emit(payload, "\n".join(text))
        return EXIT_OK
    reports = run_suites(cfg, names)
    ok = all(r.passed for r in reports)
    payload["passed"] = ok
    payload["suites"] = [r.to_json() for r in reports]
    out.emit(payload, "\n".join(r.table() for r in reports))
    return EXIT_OK if ok else EXIT_FAIL


# -- parser -----------------------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    def add(*flags, default=None, **kw):
        p.add_argument(*flags, default=argparse.SUPPRESS if suppress else default, **kw)

    add("--config", help="key=value file; flags override it")
    add("--preset", default="gkpz", choices=PRESET_NAMES)
    add("--rules-file", help="JSON rule set instead of a preset")
    add("--d", help="override the space dimension")
    add("--alpha", help="override the noise degree, e.g. -151/100")
    add("--kappa", help="kappa for the preset, e.g. 1/100")
    add("--seed", type=int, default=0)
    add("--json", nargs="?", const="-",
        help="write JSON to a file, or to stdout without a path")
    add("--max-noises", type=int, default=3)
    add("--max-poly", type=int, default=1)
    add("--max-edge", type=int, default=1)
    add("--max-depth", default="2")
    add("--max-total-poly", default="1")
    add("--projection", default="interior", choices=("interior", "literal"))


def build_parser(defaults: Optional[dict] = None) -> argparse.ArgumentParser:
    # subcommands accept the shared flags too, without overriding earlier values
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, suppress=True)

    parser = argparse.ArgumentParser(prog="hopf-recenter",
                                     description="Decorated-tree algebra and recentering maps.")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def tree_cmd(name, fn, help_, variant=False, variant_default=None):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("tree")
        if variant:
            sp.add_argument("--variant", type=int, choices=(0, 1, 2), default=variant_default)
        sp.set_defaults(func=fn)
        return sp

    tree_cmd("parse", cmd_parse, "print the canonical form of a tree")
    tree_cmd("deg", cmd_deg, "degrees of a tree", variant=True)
    tree_cmd("sym", cmd_sym, "symmetry factor")
    tree_cmd("dxi", cmd_dxi, "Malliavin derivation D_Xi")
    tree_cmd("coaction", cmd_coaction, "coaction Delta_i", variant=True, variant_default=1)
    tree_cmd("deltahat", cmd_deltahat, "hatted coaction", variant=True, variant_default=1)
    for name, fn in (("coproduct", cmd_coproduct), ("antipode", cmd_antipode)):
        sp = sub.add_parser(name, parents=[common], help=f"{name} on a positive monomial")
        sp.add_argument("monomial", help="e.g. 'X^(0,1) * I+[(0,0)](Xi)'")
        sp.add_argument("--variant", type=int, choices=(0, 1, 2), default=1)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("rules", parents=[common], help="enumerate the rule-generated trees")
    sp.add_argument("--assumption", action="store_true", help="also check the degree assumption")
    sp.set_defaults(func=cmd_rules)

    sp = sub.add_parser("model", parents=[common], help="evaluate models and recentering maps")
    sp.add_argument("model_action", choices=("premodel", "model", "dgamma"))
    sp.add_argument("tree")
    sp.add_argument("--variant", type=int, choices=(0, 1, 2), default=0)
    sp.add_argument("--base", default=None, help="base point x, comma separated")
    sp.add_argument("--at", default=None, help="evaluation point, comma separated")
    sp.add_argument("--y", default=None)
    sp.add_argument("--x", default=None)
    sp.set_defaults(func=cmd_model)

    sp = sub.add_parser("dgamma", parents=[common], help="the recentering map on a tree")
    sp.add_argument("tree")
    sp.add_argument("--variant", type=int, choices=(1, 2), default=1)
    sp.add_argument("--y", required=True)
    sp.add_argument("--x", required=True)
    sp.set_defaults(func=cmd_dgamma)

    sp = sub.add_parser("verify", parents=[common], help="run verification suites")
    sp.add_argument("--suite", default="all", choices=("all", "example", *SUITES))
    sp.add_argument("--pairs", type=int, default=5)
    sp.add_argument("--model-pairs", type=int, default=1)
    sp.add_argument("--num-tol", type=float, default=1e-8)
    sp.add_argument("--thm-tol", type=float, default=1e-7)
    sp.set_defaults(func=cmd_verify)

    if defaults:
        parser.set_defaults(**defaults)
        # subparser defaults win over the main parser, so options owned by a
        # subcommand need the config value there; shared flags must not be
        # pushed down or they would mask a flag given before the subcommand
        shared = {a.dest for a in common._actions}
        for sp in sub.choices.values():
            own = {a.dest for a in sp._actions} - shared
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in own})
    return parser


_CONFIG_TYPES = {"seed": int, "max_noises": int, "max_poly": int, "max_edge": int,
                 "pairs": int, "model_pairs": int, "num_tol": float, "thm_tol": float, "variant": int}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        defaults = {}
        if known.config:
            for k, v in read_config(known.config).items():
                defaults[k] = _CONFIG_TYPES.get(k, str)(v)
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    parser = build_parser(defaults)
    args = parser.parse_args(argv)
    if args.command == "model":
        if args.model_action == "model" and not args.base:
            parser.error("model needs --base")
        if args.model_action == "dgamma" and not (args.x and args.y):
            parser.error("dgamma needs --y and --x")
    try:
        rs = rule_set(args)
        out = Output(args)
        return args.func(args, out, rs)
    except (InputError, TreeSyntaxError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
