"""Command-line entry point ``zsfell``.

Exit status is 0 when every check passes, 1 when some check fails and 2 when
an input document does not parse.
"""

from __future__ import annotations

import argparse
import sys
from typing import Callable

import numpy as np

from . import io
from .alg import Section, basis_sections, blend_ranks, convolve, cstar_norm, i_norm, i_norm_r, i_norm_s, star_section
from .corpus import builtin, builtin_names, random_instance
from .fell import DEFAULT_TOL, validate_fell_bundle
from .gpd import check_matched_pair, validate_groupoid, zs_groupoid
from .oracle import oracle_scan
from .rep import (
    NORM_TOL,
    StrictRep,
    UnitMeasure,
    check_integrated_form,
    disintegrate,
    injectivity_check,
    integrate,
    regular_strict_rep,
    round_trip_residual,
    twisted_amplification,
    validate_covariant_rep,
    validate_strict_rep,
)
from .report import STRUCTURE, ValidationReport
from .zsb import (
    CompatibleAction,
    ZSProductBundle,
    action_from_unitary_family,
    theta_iso,
    validate_action,
    validate_unitary_family,
    zs_bundle,
)

FULL_EQUALS_REDUCED = "C*-norms use the trace GNS representation; full = reduced is assumed (finite groupoids are amenable)"


class UsageError(Exception):
    """Inputs that parse but cannot be combined; reported like a parse error."""


# ---------------------------------------------------------------------------
# report rendering


def _num(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, complex):
        return io.fmt_complex(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_num(t) for t in v) + "]"
    return str(v)


def render(rep: ValidationReport, args, fmt: str) -> str:
    if fmt == "machine":
        lines = [f"command={args.command}", f"subject={rep.subject}", f"tol={_num(rep.tol if rep.tol is not None else args.tol)}"]
        lines.append(f"seed={args.seed}")
        for c in rep.checks:
            pre = f"check.{c.id}"
            lines.append(f"{pre}.status={'PASS' if c.passed else 'FAIL'}")
            lines.append(f"{pre}.kind={c.kind}")
            if c.residual is not None:
                lines.append(f"{pre}.residual={_num(c.residual)}")
            lines.append(f"{pre}.violations={c.violations}")
            if c.witness is not None:
                lines.append(f"{pre}.witness={c.witness!r}")
        for k in sorted(rep.values):
            lines.append(f"{k}={_num(rep.values[k])}")
        for n in rep.notes:
            lines.append(f"note={n}")
        lines.append(f"verdict={'PASS' if rep.ok else 'FAIL'}")
        return "\n".join(lines) + "\n"
    out = [str(rep)]
    if rep.values:
        out.append("values:")
        out += [f"  {k} = {_num(rep.values[k])}" for k in sorted(rep.values)]
    out += [f"note: {n}" for n in rep.notes]
    return "\n".join(out) + "\n"


def emit(args, obj, action=None) -> None:
    if getattr(args, "emit", None):
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(io.dumps(io.to_document(obj, action)))


# ---------------------------------------------------------------------------
# shared helpers


def measure_from(args, units) -> UnitMeasure:
    if args.mu in (None, "uniform"):
        return UnitMeasure.uniform(units)
    L = io.load(args.mu)
    if L.kind != "measure":
        raise io.DocumentError("expected a measure document", f"{args.mu}:$.kind")
    missing = [u for u in units if u not in L.payload.weights]
    if missing:
        raise io.DocumentError(f"no weight for units {missing!r}", f"{args.mu}:$.weights")
    return UnitMeasure({u: L.payload.weights[u] for u in units})


def validate_payload(L: io.Loaded, tol: float, seed: int) -> ValidationReport:
    p = L.payload
    if L.kind == "groupoid":
        return validate_groupoid(p)
    if L.kind == "matched_pair":
        rep = check_matched_pair(p)
        if rep.ok:
            rep.merge(validate_groupoid(zs_groupoid(p)), "product.")
        return rep
    if L.kind == "matrix_bundle":
        return validate_fell_bundle(p, tol, seed=seed)
    if L.kind == "action":
        rep = validate_action(p, tol, seed=seed)
        if rep.ok:
            rep.merge(validate_fell_bundle(zs_bundle(p), tol, seed=seed), "product.")
        return rep
    if L.kind == "unitary_family":
        rep = validate_unitary_family(p.bundle, p.pair, p.u, tol)
        if rep.ok:
            base, A = action_from_unitary_family(p.bundle, p.pair, p.u)
            rep.merge(validate_action(A, tol, seed=seed), "action.")
            rep.merge(theta_iso(base, A, p.u, p.bundle, tol), "theta.")
        return rep
    if L.kind == "section":
        rep = ValidationReport(subject="section", tol=tol)
        rep.merge(validate_fell_bundle(p.bundle, tol, seed=seed), "bundle.")
        return rep
    if L.kind == "strict_rep":
        return validate_strict_rep(p, tol)
    if L.kind == "covariant_rep":
        return validate_covariant_rep(p, L.action, tol)
    rep = ValidationReport(subject="unit measure", tol=tol)
    rep.check("POSITIVE").record(True)
    return rep


def _same_action(A: CompatibleAction, B: CompatibleAction) -> bool:
    return A is B or io.enc_action(A) == io.enc_action(B)


def rebind(sigma: Section, bundle) -> Section:
    """The same coefficients viewed in an equal bundle object."""
    return Section(bundle, sigma.vec)


def strict_of_product(L: io.Loaded, args) -> tuple[StrictRep, CompatibleAction]:
    """A strict representation of a product bundle: given directly, or the regular one of an action."""
    if L.kind == "action":
        Z = zs_bundle(L.payload)
        return regular_strict_rep(Z, measure_from(args, Z.groupoid.units)), L.payload
    if L.kind == "strict_rep" and isinstance(L.payload.bundle, ZSProductBundle):
        psi = L.payload
        if args.mu not in (None, "uniform"):
            psi = StrictRep(psi.bundle, psi.hb, psi.psi, measure_from(args, psi.bundle.groupoid.units))
        return psi, L.action
    raise UsageError("expected an action or a strict representation of a product bundle")


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> ValidationReport:
    L = io.load(args.file)
    rep = validate_payload(L, args.tol, args.seed)
    rep.values["kind"] = L.kind
    return rep


def cmd_zs_groupoid(args) -> ValidationReport:
    L = io.load(args.pair)
    if L.kind != "matched_pair":
        raise UsageError("zs-groupoid needs a matched_pair document")
    rep = check_matched_pair(L.payload)
    if rep.ok:
        K = zs_groupoid(L.payload)
        rep.merge(validate_groupoid(K), "product.")
        rep.values["arrows"] = len(K.arrows)
        rep.values["units"] = len(K.units)
        emit(args, K)
    return rep


def cmd_zs_bundle(args) -> ValidationReport:
    L = io.load(args.action)
    if L.kind != "action":
        raise UsageError("zs-bundle needs an action document")
    rep = validate_action(L.payload, args.tol, seed=args.seed)
    if rep.ok:
        Z = zs_bundle(L.payload)
        rep.merge(validate_fell_bundle(Z, args.tol, seed=args.seed), "product.")
        rep.values["dim"] = sum(Z.dim(k) for k in Z.groupoid.arrows)
    return rep


def cmd_norms(args) -> ValidationReport:
    L = io.load(args.section)
    if L.kind != "section":
        raise UsageError("norms needs a section document")
    s = L.payload
    rep = ValidationReport(subject="section norms", tol=args.tol)
    c = cstar_norm(s)
    n_i = i_norm(s)
    rep.values.update(i_norm_r=i_norm_r(s), i_norm_s=i_norm_s(s), i_norm=n_i, cstar_norm=c, norm_tol=args.norm_tol)
    rep.check("CSTAR_LE_I").measure(max(0.0, c - n_i), args.norm_tol, (), scale=n_i)
    ident = abs(cstar_norm(convolve(star_section(s), s)) - c * c)
    rep.check("CSTAR_IDENTITY").measure(ident, args.norm_tol, (), scale=c * c)
    rep.notes.append(FULL_EQUALS_REDUCED)
    return rep


def cmd_blend(args) -> ValidationReport:
    L = io.load(args.action)
    if L.kind != "action":
        raise UsageError("blend needs an action document")
    rep = ValidationReport(subject="C*-blend span", tol=args.tol)
    try:
        r_ij, r_ji, full = blend_ranks(L.payload)
    except ValueError as exc:
        rep.check("UNITAL", kind=STRUCTURE).record(False, (str(exc),))
        return rep
    rep.values.update(rank=r_ij, rank_ji=r_ji, dim=full)
    rep.check("SYMMETRIC").record(r_ij == r_ji, (r_ij, r_ji))
    rep.check("DENSE").record(r_ij == full, (r_ij, full))
    return rep


def cmd_integrate(args) -> ValidationReport:
    L = io.load(args.rep)
    S = io.load(args.section)
    if S.kind != "section" or not isinstance(S.payload.bundle, ZSProductBundle):
        raise UsageError("integrate needs a section of a product bundle")
    if L.kind == "covariant_rep":
        R, A = L.payload, L.action
        if args.mu not in (None, "uniform"):
            R.mu = measure_from(args, A.pair.G.units)
    else:
        psi, A = strict_of_product(L, args)
        R = disintegrate(psi, A)
    if not _same_action(A, S.payload.bundle.action):
        raise UsageError("section and representation refer to different actions")
    sigma = rebind(S.payload, zs_bundle(A))
    rep = validate_covariant_rep(R, A, args.tol)
    rep.subject = "integrated form"
    if rep.ok:
        rep.merge(check_integrated_form(R, [sigma], args.tol, args.norm_tol), "L.")
        rep.values["norm_L"] = integrate(R, sigma).norm()
        rep.values["i_norm"] = i_norm(sigma)
    rep.values["norm_tol"] = args.norm_tol
    return rep


def cmd_disintegrate(args) -> ValidationReport:
    psi, A = strict_of_product(io.load(args.rep), args)
    Z = zs_bundle(A)
    psi = StrictRep(Z, psi.hb, psi.psi, psi.mu)
    rep = validate_strict_rep(psi, args.tol)
    rep.subject = "disintegration"
    if rep.ok:
        R = disintegrate(psi, A)
        rep.merge(validate_covariant_rep(R, A, args.tol), "covariant.")
        trip = rep.check("ROUNDTRIP")
        trip.measure(round_trip_residual(psi, A, basis_sections(Z)), args.tol, ())
        emit(args, R, A)
    return rep


def cmd_amplify(args) -> ValidationReport:
    L = io.load(args.rep)
    if L.kind == "action":
        A = L.payload
        pi = regular_strict_rep(A.base)
    elif L.kind == "strict_rep" and L.action is not None and L.payload.bundle is L.action.base:
        pi, A = L.payload, L.action
    else:
        raise UsageError("amplify needs an action or a strict representation of an action's base")
    if len(A.pair.G.units) != 1:
        raise UsageError("twisted amplification is defined for pairs of groups only")
    rep = validate_strict_rep(pi, args.tol)
    rep.subject = "twisted amplification"
    if rep.ok:
        R = twisted_amplification(pi, A)
        rep.merge(validate_covariant_rep(R, A, args.tol), "amplified.")
        emit(args, R, A)
    return rep


def cmd_inject(args) -> ValidationReport:
    L = io.load(args.section)
    if L.kind != "section" or L.action is None or L.payload.bundle is not L.action.base:
        raise UsageError("inject needs a section over the base bundle of an action")
    if len(L.action.pair.G.units) != 1:
        raise UsageError("the injectivity check is defined for pairs of groups only")
    rep = injectivity_check(L.payload, L.action, args.norm_tol)
    rep.values["norm_tol"] = args.norm_tol
    return rep


def _entry(name: str, seed: int):
    if name.startswith("random:"):
        kind, _, s = name[len("random:") :].partition(":")
        return random_instance(kind, int(s) if s else seed)
    return builtin(name)


def cmd_corpus(args) -> ValidationReport:
    if args.list or not args.name:
        rep = ValidationReport(subject="corpus listing")
        rep.values["names"] = " ".join(builtin_names())
        return rep
    try:
        e = _entry(args.name, args.seed)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    action = e.extras.get("action")
    doc = io.dumps(io.to_document(e.payload, action))
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(doc)
    else:
        sys.stdout.write(doc)
        args.quiet = True
    rep = validate_payload(io.loads(doc), args.tol, args.seed)
    rep.subject = f"corpus entry {e.name}"
    rep.values["kind"] = e.kind
    return rep


def cmd_oracle(args) -> ValidationReport:
    L = io.load(args.file)
    o = oracle_scan(L.payload)
    rep = ValidationReport(subject=f"oracle scan ({o.kind})", tol=args.tol)
    rep.check("ORACLE").record(o.ok, ("naive recomputation failed",))
    rep.notes.extend(o.notes)
    p = L.payload
    if L.kind in ("matched_pair", "action", "unitary_family"):
        pair = p if L.kind == "matched_pair" else p.pair
        K = zs_groupoid(pair)
        rep.values["product_size"] = o.values["product_size"]
        rep.check("AGREE_TABLE").record(dict(K.comp) == o.values["product_table"], ("product tables differ",))
        for k, ok in sorted(o.values["axioms"].items()):
            rep.check(f"NAIVE_{k}").record(ok, (k,))
    if "blend_rank" in o.values:
        r_ij, r_ji, full = blend_ranks(p)
        rep.values["blend_rank"] = o.values["blend_rank"]
        rep.check("AGREE_BLEND").record((r_ij, r_ji) == (o.values["blend_rank"], o.values["blend_rank_ji"]), (r_ij, r_ji))
    if "operator_norm" in o.values:
        c = cstar_norm(p)
        rep.values["operator_norm"] = o.values["operator_norm"]
        rep.check("AGREE_NORM").measure(abs(c - o.values["operator_norm"]), args.norm_tol, (c,), scale=c)
    if "eigenvalues" in o.values:
        rep.values["eigenvalues"] = [complex(z) for z in o.values["eigenvalues"]]
    return rep


COMMANDS: dict[str, tuple[Callable, list[str], str]] = {
    "validate": (cmd_validate, ["file"], "run the checker that matches the document kind"),
    "zs-groupoid": (cmd_zs_groupoid, ["pair"], "check a matched pair and build its product groupoid"),
    "zs-bundle": (cmd_zs_bundle, ["action"], "check an action and the Fell bundle axioms of its product bundle"),
    "norms": (cmd_norms, ["section"], "I-norms and C*-norm of a section"),
    "blend": (cmd_blend, ["action"], "span ranks of i(.)j(.) and j(.)i(.)"),
    "integrate": (cmd_integrate, ["rep", "section"], "integrated form of a covariant representation"),
    "disintegrate": (cmd_disintegrate, ["rep"], "covariant representation from a strict one"),
    "amplify": (cmd_amplify, ["rep"], "twisted amplification over a pair of groups"),
    "inject": (cmd_inject, ["section"], "injectivity certificate for i"),
    "corpus": (cmd_corpus, ["name"], "write a corpus entry as a document"),
    "oracle": (cmd_oracle, ["file"], "compare against brute-force recomputation"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zsfell", description="Zappa-Szep products of groupoids and Fell bundles.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="algebraic residual tolerance")
    common.add_argument("--norm-tol", type=float, default=NORM_TOL, help="tolerance for norm comparisons")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks and random corpus entries")
    common.add_argument("--mu", default="uniform", help="'uniform' or a measure document")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("human", "machine"), default="human")
    common.add_argument("--emit", help="write the produced document here")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, positional, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        for arg in positional:
            sp.add_argument(arg, nargs="?" if name == "corpus" else None)
        if name == "corpus":
            sp.add_argument("--list", action="store_true", help="list builtin names")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.quiet = False
    fn = COMMANDS[args.command][0]
    try:
        rep = fn(args)
    except io.DocumentError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if rep.tol is None:
        rep.tol = args.tol
    text = render(rep, args, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    elif not args.quiet:
        sys.stdout.write(text)
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
