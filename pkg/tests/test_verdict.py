"""Four-valued verdict lattice: order, operations, and algebraic laws."""

import itertools

import pytest

from tempoweave.verdict import Verdict, complement, join, meet

ALL = list(Verdict)


class TestBasics:
    def test_truth_order_is_total(self):
        assert Verdict.FALSE < Verdict.FALSE_C < Verdict.TRUE_C < Verdict.TRUE

    @pytest.mark.parametrize("v,short", [
        (Verdict.TRUE, "T"),
        (Verdict.TRUE_C, "Tc"),
        (Verdict.FALSE_C, "Fc"),
        (Verdict.FALSE, "F"),
    ])
    def test_short_round_trip(self, v, short):
        assert v.short == short
        assert Verdict.from_short(short) is v

    def test_from_short_rejects_garbage(self):
        with pytest.raises(ValueError):
            Verdict.from_short("maybe")

    def test_only_extremes_are_final(self):
        assert Verdict.TRUE.is_final
        assert Verdict.FALSE.is_final
        assert not Verdict.TRUE_C.is_final
        assert not Verdict.FALSE_C.is_final


class TestIdentities:
    """The worked identities for the conditional values."""

    def test_meet_of_true_and_false_c(self):
        assert meet(Verdict.TRUE, Verdict.FALSE_C) is Verdict.FALSE_C

    def test_join_of_true_and_false_c(self):
        assert join(Verdict.TRUE, Verdict.FALSE_C) is Verdict.TRUE

    def test_complement_swaps_conditionals(self):
        assert complement(Verdict.FALSE_C) is Verdict.TRUE_C
        assert complement(Verdict.TRUE_C) is Verdict.FALSE_C

    def test_complement_swaps_finals(self):
        assert complement(Verdict.TRUE) is Verdict.FALSE
        assert complement(Verdict.FALSE) is Verdict.TRUE


class TestLatticeLaws:
    """Exhaustive checks over every pair and triple of verdicts."""

    @pytest.mark.parametrize("a,b", list(itertools.product(ALL, ALL)))
    def test_commutativity(self, a, b):
        assert meet(a, b) is meet(b, a)
        assert join(a, b) is join(b, a)

    @pytest.mark.parametrize("a,b,c", list(itertools.product(ALL, ALL, ALL)))
    def test_associativity(self, a, b, c):
        assert meet(meet(a, b), c) is meet(a, meet(b, c))
        assert join(join(a, b), c) is join(a, join(b, c))

    @pytest.mark.parametrize("a,b", list(itertools.product(ALL, ALL)))
    def test_absorption(self, a, b):
        assert meet(a, join(a, b)) is a
        assert join(a, meet(a, b)) is a

    @pytest.mark.parametrize("a,b,c", list(itertools.product(ALL, ALL, ALL)))
    def test_distributivity(self, a, b, c):
        assert meet(a, join(b, c)) is join(meet(a, b), meet(a, c))
        assert join(a, meet(b, c)) is meet(join(a, b), join(a, c))

    @pytest.mark.parametrize("a", ALL)
    def test_idempotence_and_involution(self, a):
        assert meet(a, a) is a
        assert join(a, a) is a
        assert complement(complement(a)) is a

    @pytest.mark.parametrize("a,b", list(itertools.product(ALL, ALL)))
    def test_de_morgan(self, a, b):
        assert complement(meet(a, b)) is join(complement(a), complement(b))
        assert complement(join(a, b)) is meet(complement(a), complement(b))

    @pytest.mark.parametrize("a", ALL)
    def test_bounds(self, a):
        assert meet(a, Verdict.TRUE) is a
        assert meet(a, Verdict.FALSE) is Verdict.FALSE
        assert join(a, Verdict.FALSE) is a
        assert join(a, Verdict.TRUE) is Verdict.TRUE

    @pytest.mark.parametrize("a,b", list(itertools.product(ALL, ALL)))
    def test_complement_is_order_reversing(self, a, b):
        if a <= b:
            assert complement(b) <= complement(a)
