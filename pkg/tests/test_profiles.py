"""Tests for atom profiles and the compiled profile space."""

import pytest

from randworlds.errors import ProfileCapExceededError, UnknownSymbolError
from randworlds.models import Conjunction, Literal, UniversalRule
from randworlds.profiles import AtomProfile, ProfileSpace, atom_profiles, feasible_profiles, satisfies
from randworlds.scenarios import build_logic_kb, build_mistress_kb


class TestAtomProfiles:
    """Tests for atom profile enumeration."""

    def test_count_is_two_to_the_k(self):
        assert len(atom_profiles(["A", "B", "C"])) == 8

    def test_binary_counter_order(self):
        profiles = atom_profiles(["B", "A"])
        assert [p.as_dict() for p in profiles[:3]] == [
            {"A": False, "B": False},
            {"A": True, "B": False},
            {"A": False, "B": True},
        ]

    def test_empty_vocabulary_has_one_profile(self):
        (profile,) = atom_profiles([])
        assert profile.render() == "{}"

    def test_cap(self):
        with pytest.raises(ProfileCapExceededError) as exc_info:
            atom_profiles([f"P{i}" for i in range(5)], cap=4)
        assert exc_info.value.size == 5

    def test_render(self):
        profile = AtomProfile(predicates=("A", "B"), mask=0b01)
        assert profile.render() == "{A:T, B:F}"

    def test_unknown_predicate(self):
        profile = AtomProfile(predicates=("A",), mask=1)
        with pytest.raises(UnknownSymbolError):
            profile.holds("Z")

    def test_satisfies(self):
        profile = AtomProfile(predicates=("A", "B"), mask=0b01)
        assert satisfies(profile, Conjunction.of("A", Literal.neg("B")))
        assert not satisfies(profile, Conjunction.of("B"))
        assert satisfies(profile, Conjunction())


class TestProfileSpace:
    """Tests for feasibility and entailment under universal rules."""

    @pytest.fixture
    def space(self) -> ProfileSpace:
        rule = UniversalRule(antecedent=Conjunction.of("Copy"), consequent=Conjunction.of("Access"))
        return ProfileSpace(["Access", "Copy"], [rule])

    def test_rule_removes_copy_without_access(self, space):
        assert len(space.feasible) == 3
        assert not space.consistent(Conjunction.of("Copy", Literal.neg("Access")))

    def test_entails_and_refutes(self, space):
        assert space.entails(Conjunction.of("Copy"), Conjunction.of("Access"))
        assert not space.entails(Conjunction.of("Access"), Conjunction.of("Copy"))
        assert space.refutes(Conjunction.of(Literal.neg("Access")), Conjunction.of("Copy"))

    def test_equivalent_within(self, space):
        # Inside Copy, Access and truth pick out the same profiles
        assert space.equivalent(Conjunction.of("Access"), Conjunction(), within=Conjunction.of("Copy"))
        assert not space.equivalent(Conjunction.of("Access"), Conjunction())

    def test_compile_unknown_predicate(self, space):
        with pytest.raises(UnknownSymbolError):
            space.compile(Conjunction.of("Striking"))

    def test_feasible_profiles_of_kb(self):
        assert len(feasible_profiles(build_logic_kb())) == 3
        assert len(feasible_profiles(build_mistress_kb())) == 16
