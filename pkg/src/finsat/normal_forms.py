"""Formula-level rewrites.

Standard and weak normal form for the two-variable fragment, compilation of
unary partial-order formulas into the thirteen basic shapes, and the
transitive normal form that confines the distinguished relation of a
transitive signature to its four derived order relations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .logic import (
    And,
    Atom,
    DistKind,
    Eq,
    Exists,
    FALSE,
    Forall,
    Formula,
    Implies,
    LogicError,
    Not,
    OneType,
    Or,
    PreconditionError,
    Signature,
    TRUE,
    atom,
    conj,
    disj,
    enumerate_one_types,
    eq,
    formula_predicates,
    free_vars,
    is_quantifier_free,
    neg,
    simplify,
    substitute,
    swap_xy,
    t_rel,
)

S_ORDER = ("eq", "lt", "gt", "sim")


def fresh_names(sig: Signature, base: str, count: int) -> tuple[str, ...]:
    """Deterministic fresh unary predicate names avoiding sig."""
    taken = set(sig.unary) | set(sig.binary)
    out = []
    i = 0
    while len(out) < count:
        name = f"{base}{i}"
        if name not in taken:
            taken.add(name)
            out.append(name)
        i += 1
    return tuple(out)


def strip_distinct_eq(f: Formula) -> Formula:
    """Specialize a two-variable formula to distinct arguments.

    Equality atoms between x and y become falsum; the result is
    equality-free.  Only valid in contexts that quantify over distinct
    pairs.
    """
    if isinstance(f, Eq):
        return FALSE if f.left != f.right else TRUE
    if isinstance(f, Not):
        return neg(strip_distinct_eq(f.sub))
    if isinstance(f, And):
        return And(tuple(strip_distinct_eq(s) for s in f.subs))
    if isinstance(f, Or):
        return Or(tuple(strip_distinct_eq(s) for s in f.subs))
    if isinstance(f, Implies):
        return Implies(strip_distinct_eq(f.left), strip_distinct_eq(f.right))
    return f


def _contains_eq(f: Formula) -> bool:
    if isinstance(f, Eq):
        return True
    if isinstance(f, Not):
        return _contains_eq(f.sub)
    if isinstance(f, (And, Or)):
        return any(_contains_eq(s) for s in f.subs)
    if isinstance(f, Implies):
        return _contains_eq(f.left) or _contains_eq(f.right)
    if isinstance(f, (Forall, Exists)):
        return _contains_eq(f.body)
    return False


# ---------------------------------------------------------------------------
# Standard and weak normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StandardNF:
    """forall-forall part plus m >= 1 witness conjuncts.

    Denotes  AxAy(x=y | eta) & AND_h AxEy(x!=y & theta_h).
    """

    eta: Formula
    thetas: tuple[Formula, ...]

    def __post_init__(self) -> None:
        if not self.thetas:
            raise LogicError("standard normal form needs multiplicity >= 1")
        for g in (self.eta,) + self.thetas:
            if not is_quantifier_free(g):
                raise LogicError("normal-form matrix must be quantifier-free")
            if _contains_eq(g):
                raise LogicError("normal-form matrix must be equality-free")

    @property
    def multiplicity(self) -> int:
        return len(self.thetas)

    def to_formula(self) -> Formula:
        parts: list[Formula] = [
            Forall("x", Forall("y", Or((Eq("x", "y"), self.eta))))
        ]
        parts.extend(
            Forall("x", Exists("y", And((neg(Eq("x", "y")), th))))
            for th in self.thetas
        )
        return conj(parts)

    def to_weak(self) -> "WeakNF":
        return WeakNF((), self.eta, self.thetas)


@dataclass(frozen=True)
class WeakNF:
    """Standard normal form preceded by plain existential conjuncts."""

    z: tuple[Formula, ...]
    eta: Formula
    thetas: tuple[Formula, ...]

    def __post_init__(self) -> None:
        StandardNF(self.eta, self.thetas)
        for zeta in self.z:
            if not is_quantifier_free(zeta) or _contains_eq(zeta):
                raise LogicError("existential parts must be quantifier- and equality-free")
            if not free_vars(zeta) <= {"x"}:
                raise LogicError("existential parts must be unary in x")

    @property
    def multiplicity(self) -> int:
        return len(self.thetas)

    def to_formula(self) -> Formula:
        parts: list[Formula] = [Exists("x", zeta) for zeta in self.z]
        parts.append(StandardNF(self.eta, self.thetas).to_formula())
        return conj(parts)


def weak_to_standard(w: WeakNF) -> StandardNF:
    """Fold the existential conjuncts into witness conjuncts.

    Under the cardinality-at-least-2 convention, Ex.zeta is equivalent to
    AxEy(x!=y & (zeta | zeta(y))); the multiplicity grows by |Z|.
    """
    extra = tuple(
        simplify(Or((zeta, substitute(zeta, {"x": "y"})))) for zeta in w.z
    )
    return StandardNF(w.eta, w.thetas + extra)


# ---------------------------------------------------------------------------
# Scott-style reduction to standard normal form
# ---------------------------------------------------------------------------


class _Parts:
    """Accumulates eta / theta contributions while rewriting."""

    def __init__(self) -> None:
        self.eta: list[Formula] = []
        self.thetas: list[Formula] = []
        self.fresh: list[str] = []

    def add_eta_pair(self, f: Formula) -> None:
        self.eta.append(simplify(strip_distinct_eq(f)))

    def add_eta_unary(self, f: Formula) -> None:
        # Ax zeta(x) is equivalent to AxAy(x=y | zeta(x)) over domains of
        # cardinality at least 2.
        self.eta.append(simplify(f))

    def add_theta(self, f: Formula) -> None:
        self.thetas.append(simplify(strip_distinct_eq(f)))


def _orient(f: Formula, u: str, v: str) -> Formula:
    """Rename so that u plays x and v plays y."""
    if (u, v) == ("x", "y"):
        return f
    return swap_xy(f)


def _find_single_positive_exists(f: Formula, positive: bool = True):
    """Locate the unique positively occurring existential in an otherwise
    quantifier-free formula; None if the shape does not apply."""
    if isinstance(f, Exists):
        return (f, positive) if is_quantifier_free(f.body) else None
    if isinstance(f, (Atom, Eq)):
        return "qf"
    if isinstance(f, Not):
        inner = _find_single_positive_exists(f.sub, not positive)
        return inner
    if isinstance(f, Implies):
        hits = [
            _find_single_positive_exists(f.left, not positive),
            _find_single_positive_exists(f.right, positive),
        ]
        return _merge_hits(hits)
    if isinstance(f, (And, Or)):
        hits = [_find_single_positive_exists(s, positive) for s in f.subs]
        return _merge_hits(hits)
    if isinstance(f, Forall):
        return None
    raise LogicError(f"bad formula node {f!r}")


def _merge_hits(hits):
    found = None
    for h in hits:
        if h is None:
            return None
        if h == "qf":
            continue
        if found is not None:
            return None
        found = h
    return found if found is not None else "qf"


def _replace_subformula(f: Formula, target: Formula, replacement: Formula) -> Formula:
    if f == target:
        return replacement
    if isinstance(f, (Atom, Eq)):
        return f
    if isinstance(f, Not):
        return Not(_replace_subformula(f.sub, target, replacement))
    if isinstance(f, And):
        return And(tuple(_replace_subformula(s, target, replacement) for s in f.subs))
    if isinstance(f, Or):
        return Or(tuple(_replace_subformula(s, target, replacement) for s in f.subs))
    if isinstance(f, Implies):
        return Implies(
            _replace_subformula(f.left, target, replacement),
            _replace_subformula(f.right, target, replacement),
        )
    if isinstance(f, (Forall, Exists)):
        return type(f)(f.var, _replace_subformula(f.body, target, replacement))
    raise LogicError(f"bad formula node {f!r}")


def _innermost_quantified(f: Formula, binder: Optional[str] = None):
    """Deepest quantified subformula with quantifier-free body, plus the
    variable of the nearest enclosing binder at its occurrence."""
    if isinstance(f, (Atom, Eq)):
        return None
    if isinstance(f, Not):
        return _innermost_quantified(f.sub, binder)
    if isinstance(f, (And, Or)):
        for s in f.subs:
            hit = _innermost_quantified(s, binder)
            if hit:
                return hit
        return None
    if isinstance(f, Implies):
        return _innermost_quantified(f.left, binder) or _innermost_quantified(
            f.right, binder
        )
    if isinstance(f, (Forall, Exists)):
        hit = _innermost_quantified(f.body, f.var)
        if hit:
            return hit
        return (f, binder)
    raise LogicError(f"bad formula node {f!r}")


def _translate_simple(g: Formula, parts: _Parts) -> bool:
    """Direct translations for the common top-level conjunct shapes."""
    g = simplify(g)
    if is_quantifier_free(g):
        # Any remaining free variables stem from uniform marker predicates,
        # so quantifying them universally is harmless.
        parts.add_eta_pair(g)
        return True
    if isinstance(g, Forall):
        u, body = g.var, simplify(g.body)
        if is_quantifier_free(body):
            parts.add_eta_unary(
                strip_distinct_eq(substitute(body, {u: "x"}))
                if u != "x"
                else strip_distinct_eq(body)
            )
            return True
        if isinstance(body, Forall):
            v, inner = body.var, body.body
            if not is_quantifier_free(inner):
                return False
            if v == u:
                return _translate_simple(Forall(v, inner), parts)
            oriented = _orient(inner, u, v)
            # x = y disjuncts are the normal-form guard; the diagonal
            # instance is covered separately otherwise.
            if isinstance(oriented, Or) and any(
                isinstance(s, Eq) for s in oriented.subs
            ):
                rest = disj(tuple(s for s in oriented.subs if not isinstance(s, Eq)))
                parts.add_eta_pair(rest)
            else:
                parts.add_eta_pair(oriented)
                parts.add_eta_unary(simplify(substitute(oriented, {"y": "x"})))
            return True
        if isinstance(body, Exists):
            v, inner = body.var, body.body
            if not is_quantifier_free(inner):
                return False
            if v == u:
                return _translate_simple(Exists(v, inner), parts)
            oriented = _orient(inner, u, v)
            if isinstance(oriented, And) and any(
                s == neg(Eq("x", "y")) or s == neg(Eq("y", "x")) for s in oriented.subs
            ):
                rest = conj(
                    tuple(
                        s
                        for s in oriented.subs
                        if s != neg(Eq("x", "y")) and s != neg(Eq("y", "x"))
                    )
                )
                parts.add_theta(rest)
            else:
                self_wit = simplify(substitute(oriented, {"y": "x"}))
                parts.add_theta(Or((strip_distinct_eq(oriented), self_wit)))
            return True
        hit = _find_single_positive_exists(body)
        if hit not in (None, "qf") and hit[1]:
            ex = hit[0]
            v, chi = ex.var, ex.body
            if v != u:
                marker = Atom("_hole_", ())
                ctx = _replace_subformula(body, ex, marker)
                if is_quantifier_free(_replace_subformula(ctx, marker, TRUE)):
                    ctx_xy = _orient(ctx, u, v)
                    chi_xy = _orient(chi, u, v)
                    chi_self = simplify(substitute(chi_xy, {"y": "x"}))
                    parts.add_theta(
                        _replace_subformula(ctx_xy, marker, Or((chi_xy, chi_self)))
                    )
                    return True
        return False
    if isinstance(g, Exists):
        u, body = g.var, simplify(g.body)
        if is_quantifier_free(body):
            zeta = substitute(body, {u: "x"}) if u != "x" else body
            parts.add_theta(Or((zeta, substitute(zeta, {"x": "y"}))))
            return True
        return False
    return False


def _scott_conjunct(g: Formula, sig_taken: set[str], parts: _Parts) -> None:
    """Rewrite one sentence conjunct, introducing fresh definitions for
    nested quantification until a direct translation applies."""

    def fresh(base: str) -> str:
        i = 0
        while f"{base}{i}" in sig_taken:
            i += 1
        name = f"{base}{i}"
        sig_taken.add(name)
        parts.fresh.append(name)
        return name

    while True:
        if _translate_simple(g, parts):
            return
        hit = _innermost_quantified(g)
        if hit is None:
            raise LogicError(f"cannot normalize conjunct {g!r}")
        psi, binder = hit
        v, chi = psi.var, psi.body
        fv = free_vars(psi)
        if fv:
            (u,) = fv
        else:
            u = binder if binder is not None else "x"
        p = fresh("d")
        if fv and u != v:
            chi_xy = _orient(chi, u, v)
        else:
            chi_xy = substitute(chi, {v: "y"}) if v != "y" else chi
        chi_self = simplify(substitute(chi_xy, {"y": "x"}))
        if not fv:
            # Closed subformula: force the marker to be uniform.
            parts.add_eta_pair(Implies(Atom(p, ("x",)), Atom(p, ("y",))))
            parts.add_eta_pair(Implies(Atom(p, ("y",)), Atom(p, ("x",))))
        if isinstance(psi, Exists):
            w = fresh("w")
            parts.add_eta_unary(
                Implies(Atom(p, ("x",)), Or((chi_self, Atom(w, ("x",)))))
            )
            parts.add_theta(Implies(Atom(w, ("x",)), chi_xy))
            parts.add_eta_unary(Implies(chi_self, Atom(p, ("x",))))
            parts.add_eta_pair(Implies(chi_xy, Atom(p, ("x",))))
        else:
            w = fresh("w")
            parts.add_eta_unary(Implies(Atom(p, ("x",)), chi_self))
            parts.add_eta_pair(Implies(Atom(p, ("x",)), chi_xy))
            parts.add_eta_unary(
                Implies(neg(Atom(p, ("x",))), Or((neg(chi_self), Atom(w, ("x",)))))
            )
            parts.add_theta(Implies(Atom(w, ("x",)), neg(chi_xy)))
        g = simplify(_replace_subformula(g, psi, Atom(p, (u,))))


def to_standard_nf(phi: Formula, sig: Signature) -> tuple[StandardNF, Signature]:
    """Rewrite a sentence into standard normal form over an enlarged
    signature.

    The output implies the input, every model of the input expands to one
    of the output, and the growth is polynomial.  Top-level conjuncts in a
    directly expressible shape are translated in place; genuinely nested
    quantification goes through fresh definitional predicates.
    """
    if free_vars(phi):
        raise PreconditionError("normal form is defined for sentences")
    parts = _Parts()
    taken = set(sig.unary) | set(sig.binary)
    phi = simplify(phi)
    conjuncts = list(phi.subs) if isinstance(phi, And) else [phi]
    for g in conjuncts:
        _scott_conjunct(g, taken, parts)
    eta = simplify(conj(parts.eta)) if parts.eta else TRUE
    thetas = tuple(parts.thetas) if parts.thetas else (TRUE,)
    return StandardNF(eta, thetas), sig.with_unary(tuple(parts.fresh))


# ---------------------------------------------------------------------------
# Basic formulas over unary partial-order signatures
# ---------------------------------------------------------------------------


class BasicKind(Enum):
    """The thirteen shapes a unary partial-order constraint reduces to."""

    B1A = "B1a"  # at most one element of type alpha
    B1B = "B1b"  # types alpha and beta not jointly realized
    B2A = "B2a"  # distinct alpha elements pairwise incomparable
    B2B = "B2b"  # alpha elements incomparable to beta elements
    B3 = "B3"  # every alpha element below every beta element
    B4 = "B4"  # no beta element below an alpha element
    B5A = "B5a"  # alpha elements linearly ordered
    B5B = "B5b"  # alpha and beta elements pairwise comparable
    B6 = "B6"  # upward witness of another type
    B7 = "B7"  # downward witness of another type
    B8 = "B8"  # incomparable witness
    B9 = "B9"  # universal unary constraint
    B10 = "B10"  # existential unary constraint


FC_KINDS = frozenset({BasicKind.B3, BasicKind.B5B})

_ALPHA_ONLY = {BasicKind.B1A, BasicKind.B2A, BasicKind.B5A}
_ALPHA_BETA = {BasicKind.B1B, BasicKind.B2B, BasicKind.B3, BasicKind.B4, BasicKind.B5B}
_WITNESS = {BasicKind.B6, BasicKind.B7, BasicKind.B8}
_MU_ONLY = {BasicKind.B9, BasicKind.B10}


@dataclass(frozen=True)
class BasicFormula:
    kind: BasicKind
    alpha: Optional[OneType] = None
    beta: Optional[OneType] = None
    mu: Optional[Formula] = None  # unary pure Boolean, variable x

    def __post_init__(self) -> None:
        k = self.kind
        if k in _ALPHA_ONLY and not (self.alpha and self.beta is None and self.mu is None):
            raise LogicError(f"{k.value} takes a single 1-type")
        if k in _ALPHA_BETA:
            if not (self.alpha and self.beta) or self.mu is not None:
                raise LogicError(f"{k.value} takes two 1-types")
            if self.alpha == self.beta:
                raise LogicError(f"{k.value} requires distinct 1-types")
        if k in _WITNESS and not (self.alpha and self.mu is not None and self.beta is None):
            raise LogicError(f"{k.value} takes a 1-type and a unary formula")
        if k in _MU_ONLY and not (self.mu is not None and self.alpha is None and self.beta is None):
            raise LogicError(f"{k.value} takes only a unary formula")

    @property
    def factor_controllable(self) -> bool:
        return self.kind in FC_KINDS

    def to_formula(self) -> Formula:
        k = self.kind
        a = self.alpha.formula("x") if self.alpha else None
        ay = self.alpha.formula("y") if self.alpha else None
        by = self.beta.formula("y") if self.beta else None
        mu_y = substitute(self.mu, {"x": "y"}) if self.mu is not None else None
        lt = atom("<", "x", "y")
        gt = atom("<", "y", "x")
        sim = atom("~", "x", "y")
        distinct = neg(Eq("x", "y"))
        if k is BasicKind.B1A:
            body = Implies(ay, Eq("x", "y"))
        elif k is BasicKind.B1B:
            body = Implies(by, Eq("x", "y"))
        elif k is BasicKind.B2A:
            body = Implies(And((ay, distinct)), sim)
        elif k is BasicKind.B2B:
            body = Implies(by, sim)
        elif k is BasicKind.B3:
            body = Implies(by, lt)
        elif k is BasicKind.B4:
            body = Implies(by, Or((lt, sim)))
        elif k is BasicKind.B5A:
            body = Implies(And((ay, distinct)), Or((lt, gt)))
        elif k is BasicKind.B5B:
            body = Implies(by, Or((lt, gt)))
        elif k is BasicKind.B6:
            return Forall(
                "x", Implies(a, Exists("y", And((mu_y, neg(ay), lt))))
            )
        elif k is BasicKind.B7:
            return Forall(
                "x", Implies(a, Exists("y", And((mu_y, neg(ay), gt))))
            )
        elif k is BasicKind.B8:
            return Forall("x", Implies(a, Exists("y", And((mu_y, sim)))))
        elif k is BasicKind.B9:
            return Forall("x", self.mu)
        elif k is BasicKind.B10:
            return Exists("x", self.mu)
        else:  # pragma: no cover
            raise LogicError(f"bad kind {k!r}")
        return Forall("x", Implies(a, Forall("y", body)))


def basic_set_formula(psis) -> Formula:
    return conj(tuple(p.to_formula() for p in psis))


def fc_subset(psis) -> tuple[BasicFormula, ...]:
    """The factor-controllable members, in input order."""
    return tuple(p for p in psis if p.factor_controllable)


_NAV_SUBST = {
    "lt": {("<", ("x", "y")): TRUE, ("<", ("y", "x")): FALSE, ("~", ("x", "y")): FALSE},
    "gt": {("<", ("x", "y")): FALSE, ("<", ("y", "x")): TRUE, ("~", ("x", "y")): FALSE},
    "sim": {("<", ("x", "y")): FALSE, ("<", ("y", "x")): FALSE, ("~", ("x", "y")): TRUE},
}


def _eval_literals(
    f: Formula,
    sig: Signature,
    x_type: Optional[OneType],
    y_type: Optional[OneType],
    nav: Optional[dict],
) -> Formula:
    """Replace unary literals by their truth under the given 1-types and
    navigational atoms per the nav table; everything else is kept."""
    if isinstance(f, Atom):
        if f.pred in sig.unary:
            if f.args == ("x",) and x_type is not None:
                return TRUE if x_type.unary_polarity(f.pred) else FALSE
            if f.args == ("y",) and y_type is not None:
                return TRUE if y_type.unary_polarity(f.pred) else FALSE
            return f
        if nav is not None and (f.pred, f.args) in nav:
            return nav[(f.pred, f.args)]
        return f
    if isinstance(f, Eq):
        return f
    if isinstance(f, Not):
        return neg(_eval_literals(f.sub, sig, x_type, y_type, nav))
    if isinstance(f, And):
        return And(tuple(_eval_literals(s, sig, x_type, y_type, nav) for s in f.subs))
    if isinstance(f, Or):
        return Or(tuple(_eval_literals(s, sig, x_type, y_type, nav) for s in f.subs))
    if isinstance(f, Implies):
        return Implies(
            _eval_literals(f.left, sig, x_type, y_type, nav),
            _eval_literals(f.right, sig, x_type, y_type, nav),
        )
    raise LogicError("quantifier inside a matrix formula")


def to_basic(
    w: WeakNF, sig: Signature
) -> tuple[tuple[BasicFormula, ...], Signature]:
    """Compile a weak-normal-form unary partial-order formula into a
    conjunction of basic formulas over a signature with 3m fresh direction
    labels.

    The input and output are satisfiable over exactly the same finite
    domains.  Witness conjuncts are split by the direction of the witness,
    instantiated per 1-type, and strengthened to demand a witness of
    another 1-type where the direction allows it; the universal conjunct is
    instantiated per pair of 1-types and classified into the universal
    shapes.
    """
    if sig.dist is not DistKind.PARTIAL_ORDER or sig.binary:
        raise PreconditionError("basic compilation needs a unary partial-order signature")
    used = formula_predicates(w.to_formula())
    if used - set(sig.unary) - {"<", "~"}:
        raise PreconditionError(f"formula mentions predicates outside the signature: {sorted(used - set(sig.unary) - {'<', '~'})}")
    m = w.multiplicity
    labels = fresh_names(sig, "p", 3 * m)
    sig_star = sig.with_unary(labels)
    label_of = {
        (h, d): labels[3 * h + i]
        for h in range(m)
        for i, d in enumerate(("lt", "gt", "sim"))
    }
    out: list[BasicFormula] = []
    for zeta in w.z:
        out.append(BasicFormula(BasicKind.B10, mu=simplify(zeta)))
    for h in range(m):
        out.append(
            BasicFormula(
                BasicKind.B9,
                mu=Or(tuple(Atom(label_of[(h, d)], ("x",)) for d in ("lt", "gt", "sim"))),
            )
        )
    types = enumerate_one_types(sig_star)
    for h in range(m):
        for d in ("lt", "gt", "sim"):
            kind = {"lt": BasicKind.B6, "gt": BasicKind.B7, "sim": BasicKind.B8}[d]
            for alpha in types:
                if not alpha.unary_polarity(label_of[(h, d)]):
                    continue
                mu_y = simplify(
                    _eval_literals(w.thetas[h], sig_star, alpha, None, _NAV_SUBST[d])
                )
                if free_vars(mu_y) - {"y"}:
                    raise LogicError("witness matrix failed to reduce to a unary formula")
                out.append(
                    BasicFormula(kind, alpha=alpha, mu=substitute(mu_y, {"y": "x"}))
                )
    # The instantiated universal constraint depends only on the 1-type bits
    # of predicates actually occurring in it; classify once per projection
    # pair and emit per full pair of 1-types in the projection classes.
    eta_preds = sorted(formula_predicates(w.eta) & set(sig_star.unary))
    groups: dict[tuple, list[OneType]] = {}
    for tp in types:
        groups.setdefault(
            tuple(tp.unary_polarity(p) for p in eta_preds), []
        ).append(tp)

    def classify(alpha: OneType, beta: OneType) -> frozenset[str]:
        g = _eval_literals(w.eta, sig_star, alpha, beta, None)
        true_navs = set()
        for d in ("lt", "gt", "sim"):
            val = simplify(_eval_literals(g, sig_star, None, None, _NAV_SUBST[d]))
            if val not in (TRUE, FALSE):
                raise LogicError("universal matrix failed to reduce to a navigational form")
            if val == TRUE:
                true_navs.add(d)
        return frozenset(true_navs)

    seen: set[BasicFormula] = set(out)

    def emit(b: BasicFormula) -> None:
        if b not in seen:
            seen.add(b)
            out.append(b)

    pair_iter = (
        (alpha, beta, navs)
        for ga, members_a in groups.items()
        for gb, members_b in groups.items()
        for navs in (classify(members_a[0], members_b[0]),)
        if navs != {"lt", "gt", "sim"}
        for alpha in members_a
        for beta in members_b
    )
    for alpha, beta, navs in pair_iter:
        same = alpha == beta
        if not navs:
            emit(
                BasicFormula(BasicKind.B1A, alpha=alpha)
                if same
                else BasicFormula(BasicKind.B1B, alpha=alpha, beta=beta)
            )
        elif navs == {"sim"}:
            emit(
                BasicFormula(BasicKind.B2A, alpha=alpha)
                if same
                else BasicFormula(BasicKind.B2B, alpha=alpha, beta=beta)
            )
        elif navs == {"lt"}:
            emit(
                BasicFormula(BasicKind.B1A, alpha=alpha)
                if same
                else BasicFormula(BasicKind.B3, alpha=alpha, beta=beta)
            )
        elif navs == {"gt"}:
            emit(
                BasicFormula(BasicKind.B1A, alpha=alpha)
                if same
                else BasicFormula(BasicKind.B3, alpha=beta, beta=alpha)
            )
        elif navs == {"lt", "sim"}:
            emit(
                BasicFormula(BasicKind.B2A, alpha=alpha)
                if same
                else BasicFormula(BasicKind.B4, alpha=alpha, beta=beta)
            )
        elif navs == {"gt", "sim"}:
            emit(
                BasicFormula(BasicKind.B2A, alpha=alpha)
                if same
                else BasicFormula(BasicKind.B4, alpha=beta, beta=alpha)
            )
        elif navs == {"lt", "gt"}:
            emit(
                BasicFormula(BasicKind.B5A, alpha=alpha)
                if same
                else BasicFormula(BasicKind.B5B, alpha=alpha, beta=beta)
            )
    return tuple(out), sig_star


# ---------------------------------------------------------------------------
# Transitive normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitiveNF:
    """Universal parts per derived order relation plus guarded witnesses.

    Denotes  AND_s AxAy(t_s(x,y) -> eta_s)
           & AND_h AND_s AxEy(p_{h,s}(x) -> (t_s(x,y) & theta_{h,s})).
    """

    etas: tuple[Formula, Formula, Formula, Formula]  # keyed by S_ORDER
    guards: tuple[tuple[str, str, str, str], ...]  # per h, keyed by S_ORDER
    thetas: tuple[tuple[Formula, Formula, Formula, Formula], ...]

    def __post_init__(self) -> None:
        if not self.guards or len(self.guards) != len(self.thetas):
            raise LogicError("transitive normal form needs multiplicity >= 1")
        for g in self.etas + tuple(th for row in self.thetas for th in row):
            if not is_quantifier_free(g) or _contains_eq(g):
                raise LogicError("matrix must be quantifier- and equality-free")
            if _mentions_cross_t(g):
                raise LogicError("matrix must not mention cross atoms of t")

    @property
    def multiplicity(self) -> int:
        return len(self.guards)

    def to_formula(self) -> Formula:
        parts: list[Formula] = []
        for s, eta_s in zip(S_ORDER, self.etas):
            parts.append(Forall("x", Forall("y", Implies(t_rel(s), eta_s))))
        for row, ths in zip(self.guards, self.thetas):
            for s, p, th in zip(S_ORDER, row, ths):
                parts.append(
                    Forall(
                        "x",
                        Exists(
                            "y",
                            Implies(Atom(p, ("x",)), And((t_rel(s), th))),
                        ),
                    )
                )
        return conj(parts)


def _mentions_cross_t(f: Formula) -> bool:
    if isinstance(f, Atom):
        return f.pred == "t" and f.args in (("x", "y"), ("y", "x"))
    if isinstance(f, Eq):
        return False
    if isinstance(f, Not):
        return _mentions_cross_t(f.sub)
    if isinstance(f, (And, Or)):
        return any(_mentions_cross_t(s) for s in f.subs)
    if isinstance(f, Implies):
        return _mentions_cross_t(f.left) or _mentions_cross_t(f.right)
    if isinstance(f, (Forall, Exists)):
        return _mentions_cross_t(f.body)
    raise LogicError(f"bad formula node {f!r}")


_T_SUBST = {
    "eq": {("t", ("x", "y")): TRUE, ("t", ("y", "x")): TRUE},
    "lt": {("t", ("x", "y")): TRUE, ("t", ("y", "x")): FALSE},
    "gt": {("t", ("x", "y")): FALSE, ("t", ("y", "x")): TRUE},
    "sim": {("t", ("x", "y")): FALSE, ("t", ("y", "x")): FALSE},
}


def _substitute_cross_t(f: Formula, s: str) -> Formula:
    """Replace cross atoms of t by their truth under the derived relation s;
    diagonal t atoms stay."""
    if isinstance(f, Atom):
        return _T_SUBST[s].get((f.pred, f.args), f)
    if isinstance(f, Eq):
        return f
    if isinstance(f, Not):
        return neg(_substitute_cross_t(f.sub, s))
    if isinstance(f, And):
        return And(tuple(_substitute_cross_t(g, s) for g in f.subs))
    if isinstance(f, Or):
        return Or(tuple(_substitute_cross_t(g, s) for g in f.subs))
    if isinstance(f, Implies):
        return Implies(
            _substitute_cross_t(f.left, s), _substitute_cross_t(f.right, s)
        )
    raise LogicError("quantifier inside a matrix formula")


def to_transitive_nf(
    phi: Formula, sig: Signature
) -> tuple[TransitiveNF, Signature]:
    """Rewrite a transitive-signature sentence into transitive normal form.

    The output implies the input and every model of the input expands to a
    model of the output; 4m fresh guard predicates are added, one per
    witness conjunct and derived order relation.
    """
    if sig.dist is not DistKind.TRANSITIVE:
        raise PreconditionError("transitive normal form needs a transitive signature")
    snf, sig1 = to_standard_nf(phi, sig)
    m = snf.multiplicity
    names = fresh_names(sig1, "g", 4 * m)
    guards = tuple(
        (names[4 * h], names[4 * h + 1], names[4 * h + 2], names[4 * h + 3])
        for h in range(m)
    )
    sig2 = sig1.with_unary(names)
    split = conj(
        tuple(
            disj(tuple(Atom(p, ("x",)) for p in guards[h]))
            for h in range(m)
        )
    )
    etas = tuple(
        simplify(And((_substitute_cross_t(snf.eta, s), split))) for s in S_ORDER
    )
    thetas = tuple(
        tuple(simplify(_substitute_cross_t(snf.thetas[h], s)) for s in S_ORDER)
        for h in range(m)
    )
    return TransitiveNF(etas, guards, thetas), sig2
