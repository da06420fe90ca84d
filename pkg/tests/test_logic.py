"""Core syntax, semantics and type machinery."""

import itertools

import pytest

from finsat.logic import (
    And,
    Atom,
    DistKind,
    Eq,
    Exists,
    Forall,
    Not,
    Or,
    PreconditionError,
    Signature,
    SignatureMismatchError,
    Structure,
    check_distinguished,
    enumerate_one_types,
    enumerate_semi_diagonal_types,
    evaluate,
    one_type_of,
    two_type_of,
    NavKind,
)
from finsat.parsing import parse_formula
from finsat.solver import random_formula, random_structure

from oracles import naive_eval

PO = Signature(("p",), (), DistKind.PARTIAL_ORDER)
TR = Signature(("p",), (), DistKind.TRANSITIVE)


def two_elem(sig=PO, **kw):
    return Structure(sig, 2, **kw)


def test_cardinality_two_validity_and_contradiction():
    s = two_elem()
    assert evaluate(s, parse_formula("forall x exists y (x != y)", PO))
    assert not evaluate(s, parse_formula("forall x forall y (x = y)", PO))


def test_witness_pair():
    s = Structure(PO, 2, {"p": frozenset()}, {}, frozenset({(0, 1)}))
    assert evaluate(s, parse_formula("exists x exists y (x < y)", PO))


def test_unknown_predicate_rejected():
    s = two_elem()
    with pytest.raises(SignatureMismatchError):
        evaluate(s, Atom("zz", ("x",)), {"x": 0})


def test_unassigned_free_variable_rejected():
    with pytest.raises(PreconditionError):
        evaluate(two_elem(), Atom("p", ("x",)))


def test_one_type_of_polarity():
    s = Structure(PO, 2, {"p": frozenset({0})}, {}, frozenset())
    assert one_type_of(s, 0).unary_polarity("p")
    assert not one_type_of(s, 1).unary_polarity("p")


def test_one_type_transitive_diagonal():
    s = Structure(TR, 2, {}, {}, frozenset({(0, 0)}))
    assert one_type_of(s, 0).t_diag
    assert not one_type_of(s, 1).t_diag


def test_two_type_navigational_alternatives():
    s = Structure(PO, 2, {}, {}, frozenset({(0, 1)}))
    assert two_type_of(s, 0, 1).nav is NavKind.LT
    assert two_type_of(s, 1, 0).nav is NavKind.GT
    empty = Structure(PO, 2, {}, {}, frozenset())
    assert two_type_of(empty, 0, 1).nav is NavKind.SIM


def test_two_type_requires_distinct_elements():
    with pytest.raises(PreconditionError):
        two_type_of(two_elem(), 0, 0)


def test_enumerate_one_type_counts():
    assert len(enumerate_one_types(Signature(("p",), (), DistKind.PARTIAL_ORDER))) == 2
    assert len(enumerate_one_types(Signature(("p", "q"), (), DistKind.PARTIAL_ORDER))) == 4
    assert len(enumerate_one_types(Signature(("p",), (), DistKind.TRANSITIVE))) == 4


def test_check_distinguished_reports():
    s = Structure(TR, 3, {}, {}, frozenset({(0, 1), (1, 2)}))
    assert any("(0,2)" in v for v in check_distinguished(s))
    ok = Structure(TR, 3, {}, {}, frozenset({(0, 1), (1, 2), (0, 2)}))
    assert check_distinguished(ok) == []
    bad = Structure(PO, 1, {}, {}, frozenset({(0, 0)}))
    assert any("irreflexivity" in v for v in check_distinguished(bad))


def test_two_type_restriction_matches_one_type():
    for seed in range(20):
        sig = Signature(("p", "q"), ("r",), DistKind.PARTIAL_ORDER)
        s = random_structure(seed, sig, 4)
        for a, b in itertools.permutations(range(4), 2):
            assert two_type_of(s, a, b).x == one_type_of(s, a)


def test_exactly_one_navigational_alternative():
    for seed in range(20):
        s = random_structure(seed, PO, 5)
        for a, b in itertools.permutations(range(5), 2):
            nav = two_type_of(s, a, b).nav
            count = sum(
                (
                    nav is NavKind.LT,
                    nav is NavKind.GT,
                    nav is NavKind.SIM,
                )
            )
            assert count == 1


def test_mutual_t_forces_diagonals():
    sig = Signature((), (), DistKind.TRANSITIVE)
    s = Structure(sig, 2, {}, {}, frozenset({(0, 1), (1, 0), (0, 0), (1, 1)}))
    tau = two_type_of(s, 0, 1)
    assert tau.nav == (True, True) and tau.x.t_diag and tau.y.t_diag


def test_semi_diagonal_enumeration_counts():
    sig = Signature(("p",), ("r",), DistKind.PARTIAL_ORDER)
    # 1-types: p-bit x r-diagonal-bit; three navigational alternatives.
    assert len(list(enumerate_semi_diagonal_types(sig))) == 4 * 4 * 3


def test_evaluate_agrees_with_naive_oracle():
    sig = Signature(("p", "q"), ("r",), DistKind.PARTIAL_ORDER)
    tsig = Signature(("p", "q"), ("r",), DistKind.TRANSITIVE)
    for seed in range(60):
        use = sig if seed % 2 else tsig
        s = random_structure(seed, use, 2 + seed % 4)
        f = random_formula(seed, use, depth=3)
        assert evaluate(s, f) == naive_eval(s, f)
