"""Canonical text interchange format.

A document is a JSON object with a ``kind`` field. Arrow and unit ids are
strings or, for product groupoids, nested lists (decoded back to tuples).
Complex numbers are strings ``"(re, im)"`` with 17 significant digits, so a
parse/print cycle is exact. Keys are sorted and indentation is fixed, which
makes the printed form canonical.
"""

from __future__ import annotations

import json
import re
from typing import Any

import numpy as np

from .alg import Section
from .fell import ConcreteMatrixBundle, FellBundle, PullbackBundle
from .gpd import Arrow, FiniteGroupoid, MatchedPair
from .rep import CovariantRep, FiniteHilbertBundle, StrictRep, UnitMeasure
from .zsb import CompatibleAction, UnitaryFamily, ZSProductBundle, zs_bundle

FORMAT = "zsfell/1"
KINDS = (
    "groupoid",
    "matched_pair",
    "matrix_bundle",
    "action",
    "unitary_family",
    "section",
    "strict_rep",
    "covariant_rep",
    "measure",
)


class DocumentError(ValueError):
    """A document that does not parse; ``location`` is ``line:col`` or a JSON path."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


# ---------------------------------------------------------------------------
# scalars and ids

_COMPLEX = re.compile(r"^\(\s*([^,\s]+)\s*,\s*([^,\s)]+)\s*\)$")


def fmt_complex(z: complex) -> str:
    z = complex(z)
    re_, im = z.real + 0.0, z.imag + 0.0  # drop negative zeros
    return f"({re_:.17g}, {im:.17g})"


def parse_complex(text: Any, where: str) -> complex:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return complex(text)
    m = _COMPLEX.match(text) if isinstance(text, str) else None
    if not m:
        raise DocumentError(f"expected a complex number '(re, im)', got {text!r}", where)
    try:
        z = complex(float(m.group(1)), float(m.group(2)))
    except ValueError:
        raise DocumentError(f"bad number in {text!r}", where) from None
    if not np.isfinite(z):
        raise DocumentError(f"non-finite number {text!r}", where)
    return z


def enc_id(a):
    return [enc_id(t) for t in a] if isinstance(a, tuple) else a


def dec_id(a, where: str):
    if isinstance(a, list):
        return tuple(dec_id(t, where) for t in a)
    if isinstance(a, str):
        return a
    raise DocumentError(f"ids are strings or lists, got {a!r}", where)


def enc_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[fmt_complex(z) for z in row] for row in m]


def dec_matrix(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise DocumentError("expected a matrix (list of rows)", where)
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise DocumentError("ragged matrix rows", where)
    vals = [[parse_complex(z, f"{where}[{i}][{j}]") for j, z in enumerate(r)] for i, r in enumerate(rows)]
    return np.array(vals, dtype=complex).reshape(len(rows), widths.pop() if widths else 0)


def enc_vector(v) -> list:
    return [fmt_complex(z) for z in np.asarray(v, dtype=complex).reshape(-1)]


def dec_vector(vals, where: str) -> np.ndarray:
    if not isinstance(vals, list):
        raise DocumentError("expected a vector", where)
    return np.array([parse_complex(z, f"{where}[{i}]") for i, z in enumerate(vals)], dtype=complex)


def _field(doc: dict, key: str, where: str, typ=None):
    if not isinstance(doc, dict):
        raise DocumentError("expected an object", where)
    if key not in doc:
        raise DocumentError(f"missing field {key!r}", where)
    val = doc[key]
    if typ is not None and not isinstance(val, typ):
        raise DocumentError(f"field {key!r} has the wrong type", f"{where}.{key}")
    return val


def _rows(doc: dict, key: str, where: str, width: int) -> list:
    rows = _field(doc, key, where, list)
    for i, r in enumerate(rows):
        if not isinstance(r, list) or len(r) != width:
            raise DocumentError(f"expected {width} entries", f"{where}.{key}[{i}]")
    return rows


# ---------------------------------------------------------------------------
# encoders


def enc_groupoid(G: FiniteGroupoid) -> dict:
    return {
        "name": G.name,
        "units": [enc_id(u) for u in G.units],
        "arrows": [[enc_id(a), enc_id(G.src[a]), enc_id(G.rng[a])] for a in G.arrows],
        "comp": [[enc_id(a), enc_id(b), enc_id(ab)] for a, b, ab in G.composable()],
        "inv": [[enc_id(a), enc_id(G.inv[a])] for a in G.arrows],
        "unit_arrow": [[enc_id(u), enc_id(G.unit_arrow[u])] for u in G.units],
    }


def enc_pair(P: MatchedPair) -> dict:
    return {
        "name": P.name,
        "G": enc_groupoid(P.G),
        "H": enc_groupoid(P.H),
        "act": [[enc_id(h), enc_id(x), enc_id(P.act[(h, x)])] for h, x in P.domain()],
        "res": [[enc_id(h), enc_id(x), enc_id(P.res[(h, x)])] for h, x in P.domain()],
    }


def materialize(B: FellBundle) -> ConcreteMatrixBundle:
    """A matrix bundle equal to ``B``; pullbacks of matrix bundles are copied fiber by fiber."""
    if isinstance(B, ConcreteMatrixBundle):
        return B
    if isinstance(B, PullbackBundle) and isinstance(B.C, ConcreteMatrixBundle):
        G, C = B.groupoid, B.C
        dims = {u: C.dims[C.groupoid.rng[B.f[G.unit_arrow[u]]]] for u in G.units}
        basis = {x: list(C.basis_mats[B.f[x]]) for x in G.arrows}
        return ConcreteMatrixBundle(G, dims, basis, name=B.name, orthonormalize=False)
    raise TypeError(f"cannot write a {type(B).__name__} as a matrix bundle")


def enc_bundle(B: FellBundle) -> dict:
    M = materialize(B)
    G = M.groupoid
    return {
        "name": M.name,
        "groupoid": enc_groupoid(G),
        "dims": [[enc_id(u), M.dims[u]] for u in G.units],
        "fibers": [[enc_id(x), [enc_matrix(m) for m in M.basis_mats[x]]] for x in G.arrows],
    }


def enc_action(A: CompatibleAction) -> dict:
    return {
        "name": A.name,
        "pair": enc_pair(A.pair),
        "base": enc_bundle(A.base),
        "beta": [[enc_id(h), enc_id(x), enc_matrix(A.beta[(h, x)])] for h, x in A.pair.domain()],
    }


def enc_family(F: UnitaryFamily) -> dict:
    return {
        "name": F.name,
        "pair": enc_pair(F.pair),
        "bundle": enc_bundle(F.bundle),
        "u": [[enc_id(h), enc_vector(F.u[h].vec)] for h in F.pair.H.arrows],
    }


def enc_measure(mu: UnitMeasure) -> list:
    return [[enc_id(u), float(w)] for u, w in mu.weights.items()]


def _bundle_source(B: FellBundle, action: CompatibleAction | None) -> dict:
    """Where a section or representation lives: a product bundle, an action's base, or a matrix bundle."""
    if isinstance(B, ZSProductBundle):
        return {"action": enc_action(B.action), "over": "product"}
    if action is not None and B is action.base:
        return {"action": enc_action(action), "over": "base"}
    return {"bundle": enc_bundle(B)}


def enc_section(s: Section, action: CompatibleAction | None = None) -> dict:
    G = s.bundle.groupoid
    return {**_bundle_source(s.bundle, action), "coeffs": [[enc_id(x), enc_vector(s[x])] for x in G.arrows]}


def enc_strict(R: StrictRep, action: CompatibleAction | None = None) -> dict:
    G = R.bundle.groupoid
    return {
        **_bundle_source(R.bundle, action),
        "mu": enc_measure(R.mu),
        "m": [[enc_id(u), R.hb.m[u]] for u in R.hb.order],
        "psi": [[enc_id(x), [enc_matrix(m) for m in R.psi[x]]] for x in G.arrows],
    }


def enc_covariant(R: CovariantRep, A: CompatibleAction) -> dict:
    return {
        "action": enc_action(A),
        "mu": enc_measure(R.mu),
        "m": [[enc_id(u), R.hb.m[u]] for u in R.hb.order],
        "pi": [[enc_id(x), [enc_matrix(m) for m in R.pi[x]]] for x in A.pair.G.arrows],
        "M": [[enc_id(h), enc_matrix(R.M[h])] for h in A.pair.H.arrows],
    }


def to_document(obj, action: CompatibleAction | None = None) -> dict:
    """Wrap a payload as a document; ``action`` says which action a base-bundle object belongs to."""
    if isinstance(obj, FiniteGroupoid):
        kind, body = "groupoid", enc_groupoid(obj)
    elif isinstance(obj, MatchedPair):
        kind, body = "matched_pair", enc_pair(obj)
    elif isinstance(obj, CompatibleAction):
        kind, body = "action", enc_action(obj)
    elif isinstance(obj, UnitaryFamily):
        kind, body = "unitary_family", enc_family(obj)
    elif isinstance(obj, Section):
        kind, body = "section", enc_section(obj, action)
    elif isinstance(obj, StrictRep):
        kind, body = "strict_rep", enc_strict(obj, action)
    elif isinstance(obj, CovariantRep):
        if action is None:
            raise ValueError("a covariant representation is written together with its action")
        kind, body = "covariant_rep", enc_covariant(obj, action)
    elif isinstance(obj, UnitMeasure):
        kind, body = "measure", {"weights": enc_measure(obj)}
    elif isinstance(obj, FellBundle):
        kind, body = "matrix_bundle", enc_bundle(obj)
    else:
        raise TypeError(f"no document kind for {type(obj).__name__}")
    return {"format": FORMAT, "kind": kind, **body}


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# decoders


def dec_groupoid(doc: dict, where: str) -> FiniteGroupoid:
    units = [dec_id(u, f"{where}.units") for u in _field(doc, "units", where, list)]
    arrows = []
    for i, (a, s, r) in enumerate(_rows(doc, "arrows", where, 3)):
        w = f"{where}.arrows[{i}]"
        arrows.append(Arrow(dec_id(a, w), dec_id(s, w), dec_id(r, w)))
    comp = {}
    for i, (a, b, c) in enumerate(_rows(doc, "comp", where, 3)):
        w = f"{where}.comp[{i}]"
        comp[(dec_id(a, w), dec_id(b, w))] = dec_id(c, w)
    inv = {dec_id(a, where): dec_id(b, where) for a, b in _rows(doc, "inv", where, 2)}
    unit_arrow = {dec_id(u, where): dec_id(a, where) for u, a in _rows(doc, "unit_arrow", where, 2)}
    try:
        return FiniteGroupoid(units, arrows, comp, inv, unit_arrow, name=str(doc.get("name", "")))
    except (ValueError, KeyError) as exc:
        raise DocumentError(f"invalid groupoid: {exc}", where) from None


def dec_pair(doc: dict, where: str) -> MatchedPair:
    G = dec_groupoid(_field(doc, "G", where, dict), f"{where}.G")
    H = dec_groupoid(_field(doc, "H", where, dict), f"{where}.H")
    act = {(dec_id(h, where), dec_id(x, where)): dec_id(y, where) for h, x, y in _rows(doc, "act", where, 3)}
    res = {(dec_id(h, where), dec_id(x, where)): dec_id(k, where) for h, x, k in _rows(doc, "res", where, 3)}
    return MatchedPair(G, H, act, res, name=str(doc.get("name", "")))


def dec_bundle(doc: dict, where: str, groupoid: FiniteGroupoid | None = None) -> ConcreteMatrixBundle:
    G = dec_groupoid(_field(doc, "groupoid", where, dict), f"{where}.groupoid")
    if groupoid is not None:
        if not G.same_tables(groupoid):
            raise DocumentError("bundle groupoid does not match", f"{where}.groupoid")
        G = groupoid
    dims = {}
    for i, (u, n) in enumerate(_rows(doc, "dims", where, 2)):
        if not isinstance(n, int) or isinstance(n, bool):
            raise DocumentError("dimension must be an integer", f"{where}.dims[{i}]")
        dims[dec_id(u, where)] = n
    basis = {}
    for i, (x, mats) in enumerate(_rows(doc, "fibers", where, 2)):
        w = f"{where}.fibers[{i}]"
        if not isinstance(mats, list):
            raise DocumentError("expected a list of matrices", w)
        basis[dec_id(x, w)] = [dec_matrix(m, f"{w}[{j}]") for j, m in enumerate(mats)]
    missing = [u for u in G.units if u not in dims]
    if missing:
        raise DocumentError(f"no dimension for units {missing!r}", f"{where}.dims")
    try:
        return ConcreteMatrixBundle(G, dims, basis, name=str(doc.get("name", "")), orthonormalize=False)
    except ValueError as exc:
        raise DocumentError(str(exc), where) from None


def dec_action(doc: dict, where: str) -> CompatibleAction:
    P = dec_pair(_field(doc, "pair", where, dict), f"{where}.pair")
    base = dec_bundle(_field(doc, "base", where, dict), f"{where}.base", P.G)
    beta = {}
    for i, (h, x, m) in enumerate(_rows(doc, "beta", where, 3)):
        w = f"{where}.beta[{i}]"
        beta[(dec_id(h, w), dec_id(x, w))] = dec_matrix(m, w)
    return CompatibleAction(P, base, beta, name=str(doc.get("name", "")))


def dec_family(doc: dict, where: str) -> UnitaryFamily:
    from .fell import Element

    P = dec_pair(_field(doc, "pair", where, dict), f"{where}.pair")
    C = dec_bundle(_field(doc, "bundle", where, dict), f"{where}.bundle")
    u = {}
    for i, (h, vec) in enumerate(_rows(doc, "u", where, 2)):
        w = f"{where}.u[{i}]"
        hid = dec_id(h, w)
        u[hid] = Element(P.embed_H(hid), dec_vector(vec, w))
    return UnitaryFamily(C, P, u, name=str(doc.get("name", "")))


def dec_measure(rows, where: str) -> UnitMeasure:
    if not isinstance(rows, list):
        raise DocumentError("expected a list of [unit, weight]", where)
    weights = {}
    for i, r in enumerate(rows):
        if not (isinstance(r, list) and len(r) == 2 and isinstance(r[1], (int, float))):
            raise DocumentError("expected [unit, weight]", f"{where}[{i}]")
        weights[dec_id(r[0], where)] = float(r[1])
    try:
        return UnitMeasure(weights)
    except ValueError as exc:
        raise DocumentError(str(exc), where) from None


def _dec_source(doc: dict, where: str) -> tuple[FellBundle, CompatibleAction | None]:
    if "action" in doc:
        A = dec_action(_field(doc, "action", where, dict), f"{where}.action")
        over = doc.get("over", "product")
        if over == "product":
            return zs_bundle(A), A
        if over == "base":
            return A.base, A
        raise DocumentError("'over' is 'product' or 'base'", f"{where}.over")
    return dec_bundle(_field(doc, "bundle", where, dict), f"{where}.bundle"), None


def _dec_hb(doc: dict, where: str) -> FiniteHilbertBundle:
    m = {}
    for i, (u, n) in enumerate(_rows(doc, "m", where, 2)):
        if not isinstance(n, int) or n < 0:
            raise DocumentError("fiber dimension must be a non-negative integer", f"{where}.m[{i}]")
        m[dec_id(u, where)] = n
    return FiniteHilbertBundle(m, tuple(m))


def _dec_maps(rows, where: str) -> dict:
    out = {}
    for i, r in enumerate(rows):
        w = f"{where}[{i}]"
        if not (isinstance(r, list) and len(r) == 2 and isinstance(r[1], list)):
            raise DocumentError("expected [arrow, [matrices]]", w)
        mats = [dec_matrix(m, f"{w}[{j}]") for j, m in enumerate(r[1])]
        out[dec_id(r[0], w)] = np.array(mats, dtype=complex) if mats else np.zeros((0, 0, 0), dtype=complex)
    return out


def dec_section(doc: dict, where: str) -> tuple[Section, CompatibleAction | None]:
    B, A = _dec_source(doc, where)
    coeffs = {}
    for i, (x, vec) in enumerate(_rows(doc, "coeffs", where, 2)):
        w = f"{where}.coeffs[{i}]"
        xid = dec_id(x, w)
        if xid not in B.groupoid.src:
            raise DocumentError(f"unknown arrow {xid!r}", w)
        v = dec_vector(vec, w)
        if v.shape != (B.dim(xid),):
            raise DocumentError(f"expected {B.dim(xid)} coefficients", w)
        coeffs[xid] = v
    return Section.from_coeffs(B, coeffs), A


def dec_strict(doc: dict, where: str) -> tuple[StrictRep, CompatibleAction | None]:
    B, A = _dec_source(doc, where)
    hb = _dec_hb(doc, where)
    psi = _dec_maps(_field(doc, "psi", where, list), f"{where}.psi")
    mu = dec_measure(doc["mu"], f"{where}.mu") if "mu" in doc else None
    return StrictRep(B, hb, psi, mu), A


def dec_covariant(doc: dict, where: str) -> tuple[CovariantRep, CompatibleAction]:
    A = dec_action(_field(doc, "action", where, dict), f"{where}.action")
    hb = _dec_hb(doc, where)
    pi = _dec_maps(_field(doc, "pi", where, list), f"{where}.pi")
    M = {}
    for i, r in enumerate(_rows(doc, "M", where, 2)):
        w = f"{where}.M[{i}]"
        M[dec_id(r[0], w)] = dec_matrix(r[1], w)
    mu = dec_measure(doc["mu"], f"{where}.mu") if "mu" in doc else UnitMeasure.uniform(A.pair.G.units)
    return CovariantRep(mu, hb, pi, M), A


class Loaded:
    """A parsed document: its kind, the payload, and the action it refers to (if any)."""

    def __init__(self, kind: str, payload, action: CompatibleAction | None = None):
        self.kind, self.payload, self.action = kind, payload, action


def from_document(doc: Any) -> Loaded:
    kind = _field(doc, "kind", "$", str)
    if kind not in KINDS:
        raise DocumentError(f"unknown kind {kind!r}", "$.kind")
    if doc.get("format", FORMAT) != FORMAT:
        raise DocumentError(f"unsupported format {doc.get('format')!r}", "$.format")
    w = "$"
    try:
        if kind == "groupoid":
            return Loaded(kind, dec_groupoid(doc, w))
        if kind == "matched_pair":
            return Loaded(kind, dec_pair(doc, w))
        if kind == "matrix_bundle":
            return Loaded(kind, dec_bundle(doc, w))
        if kind == "action":
            A = dec_action(doc, w)
            return Loaded(kind, A, A)
        if kind == "unitary_family":
            return Loaded(kind, dec_family(doc, w))
        if kind == "section":
            return Loaded(kind, *dec_section(doc, w))
        if kind == "strict_rep":
            return Loaded(kind, *dec_strict(doc, w))
        if kind == "covariant_rep":
            return Loaded(kind, *dec_covariant(doc, w))
        return Loaded(kind, dec_measure(_field(doc, "weights", w, list), f"{w}.weights"))
    except DocumentError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"inconsistent document: {exc}", w) from None


def loads(text: str) -> Loaded:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, f"{exc.lineno}:{exc.colno}") from None
    return from_document(doc)


def load(path: str) -> Loaded:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return loads(text)
    except DocumentError as exc:
        raise DocumentError(str(exc).split(": ", 1)[1], f"{path}:{exc.location}") from None


def canonicalize(text: str) -> str:
    """Parse and print again; idempotent."""
    L = loads(text)
    return dumps(to_document(L.payload, L.action))

