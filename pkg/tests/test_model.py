"""
Tests for the domain types.
"""

from fractions import Fraction

import pytest

from spinelab.errors import ContractViolation, InvalidUniverse
from spinelab.model import (
    Assignment,
    Constraint,
    ConstraintTemplate,
    ConstraintUniverse,
    Formula,
    Graph,
    Hypergraph,
    TemplateSet,
    coloring_formula,
    constraint_satisfied,
    index_tuple,
    tuple_index,
    universe_enumerate,
)

from .helpers import ksat


def _or(k=2):
    return ConstraintTemplate.from_predicate("or", 2, k, lambda v: any(v))


class TestTupleIndex:
    """Test the tuple indexing convention."""

    def test_first_coordinate_most_significant(self):
        """Test (1, 0, 1) over t=2 is index 5."""
        assert tuple_index((1, 0, 1), 2) == 5
        assert index_tuple(5, 2, 3) == (1, 0, 1)

    def test_ternary(self):
        """Test indexing over a three-value domain."""
        assert tuple_index((2, 1), 3) == 7
        assert index_tuple(7, 3, 2) == (2, 1)


class TestConstraintTemplate:
    """Test ConstraintTemplate."""

    def test_from_predicate(self):
        """Test the 3-OR relation has seven satisfying tuples."""
        template = _or(3)
        assert template.size == 7
        assert not template.accepts((0, 0, 0))
        assert template.accepts((0, 1, 0))

    def test_from_tuples(self):
        """Test building a template from satisfying tuples."""
        template = ConstraintTemplate.from_tuples("x", 2, 2, [(0, 1), (1, 0)])
        assert template.sat_tuples() == [(0, 1), (1, 0)]
        assert template.size == 2

    def test_bad_tuple(self):
        """Test a tuple outside the domain is rejected."""
        with pytest.raises(ValueError, match="bad tuple"):
            ConstraintTemplate.from_tuples("x", 2, 2, [(0, 2)])

    def test_table_length_checked(self):
        """Test the table must have t^k entries."""
        with pytest.raises(ValueError, match="expected 4"):
            ConstraintTemplate("x", 2, 2, (True, False))

    @pytest.mark.parametrize("k", [0, 1])
    def test_arity_below_two_rejected(self, k):
        """Test templates need at least two positions, like template sets."""
        with pytest.raises(ValueError, match="k >= 2"):
            ConstraintTemplate.from_tuples("u", 2, k, [])

    def test_empty_and_full(self):
        """Test empty and full relations are recognised."""
        assert ConstraintTemplate.from_tuples("e", 2, 2, []).is_empty
        assert ConstraintTemplate.from_predicate("f", 2, 2, lambda v: True).is_full

    def test_signed(self):
        """Test a negative sign flips the value seen by the relation."""
        signed = _or(2).signed((True, False))
        assert signed.accepts((0, 0))
        assert not signed.accepts((0, 1))
        assert signed.id == "or[+-]"

    def test_signed_needs_boolean(self):
        """Test signs are refused over larger domains."""
        template = ConstraintTemplate.from_predicate("neq", 3, 2, lambda v: v[0] != v[1])
        with pytest.raises(ValueError):
            template.signed((True, False))


class TestTemplateSet:
    """Test TemplateSet."""

    def test_arity_one_rejected(self):
        """Test k = 1 template sets are rejected."""
        with pytest.raises(ValueError, match="k >= 2"):
            TemplateSet(2, 1, ())

    def test_duplicate_ids(self):
        """Test two templates may not share an id."""
        with pytest.raises(ValueError, match="duplicate"):
            TemplateSet.of(_or(), _or())

    def test_mismatched_arity(self):
        """Test every template must match (t, k)."""
        with pytest.raises(ValueError):
            TemplateSet(2, 2, (_or(3),))

    def test_get(self):
        """Test looking up templates by id."""
        ts = TemplateSet.of(_or())
        assert ts.get("or").size == 3
        with pytest.raises(KeyError):
            ts.get("nand")


class TestConstraint:
    """Test Constraint and satisfaction."""

    def test_distinct_variables(self):
        """Test repeated variables are rejected."""
        with pytest.raises(ValueError, match="distinct"):
            Constraint(_or(), (1, 1))

    def test_arity_mismatch(self):
        """Test the variable tuple must match the arity."""
        with pytest.raises(ValueError):
            Constraint(_or(), (0, 1, 2))

    def test_label(self):
        """Test labels are 1-indexed and carry signs."""
        assert Constraint(_or(), (0, 2), (True, False)).label() == "or 1 3 + -"
        assert Constraint(_or(), (3, 1)).label() == "or 4 2"

    def test_satisfied(self):
        """Test satisfaction under a signed clause (x1 or not x2)."""
        c = Constraint(_or(), (0, 1), (True, False))
        assert constraint_satisfied(c, Assignment.of([0, 0]))
        assert not constraint_satisfied(c, Assignment.of([0, 1]))

    def test_unassigned_variable(self):
        """Test an open variable is a contract violation."""
        c = Constraint(_or(), (0, 1))
        with pytest.raises(ContractViolation):
            constraint_satisfied(c, Assignment.empty(2))

    def test_value_outside_domain(self):
        """Test out-of-domain values are a contract violation."""
        c = Constraint(_or(), (0, 1))
        with pytest.raises(ContractViolation):
            constraint_satisfied(c, Assignment.of([0, 2]))

    def test_semantic_key(self, implies_template):
        """Test x1 -> x2 equals the reversed relation applied to (x2, x1)."""
        reverse = ConstraintTemplate.from_predicate("rimp", 2, 2, lambda v: v[0] >= v[1])
        assert Constraint(implies_template, (0, 1)).key() == Constraint(reverse, (1, 0)).key()
        assert Constraint(implies_template, (0, 1)).key() != Constraint(implies_template, (1, 0)).key()


class TestAssignment:
    """Test Assignment helpers."""

    def test_empty(self):
        """Test the empty assignment has nothing assigned."""
        a = Assignment.empty(3)
        assert not a.is_total
        assert a.to_text() == "? ? ?"

    def test_with_value_and_completed(self):
        """Test setting a value and completing the rest."""
        a = Assignment.empty(3).with_value(1, 1)
        assert a.assigned(1)
        assert a.completed().values == (0, 1, 0)


class TestFormula:
    """Test Formula."""

    def test_density_and_variables(self):
        """Test m / n and Var(F)."""
        f = ksat(5, [(1, 2, -3), (-2, 3, 4)])
        assert f.m == 2
        assert f.density == Fraction(2, 5)
        assert f.variables() == frozenset({0, 1, 2, 3})
        assert f.is_signed

    def test_variable_out_of_range(self):
        """Test constraints must use variables below n."""
        with pytest.raises(ValueError):
            ksat(2, [(1, 2, 3)])

    def test_subformula_and_without(self):
        """Test picking and dropping constraints keeps order."""
        f = ksat(4, [(1, 2, 3), (2, 3, 4), (1, 3, 4)])
        assert f.subformula([2, 0]).constraints == (f.constraints[2], f.constraints[0])
        assert f.without(1).constraints == (f.constraints[0], f.constraints[2])

    def test_violations(self):
        """Test counting violated constraints."""
        f = ksat(3, [(1, 2, 3), (-1, -2, -3)])
        assert f.violations(Assignment.of([0, 0, 0])) == 1
        assert f.satisfied_by(Assignment.of([1, 0, 0]))


class TestConstraintUniverse:
    """Test ConstraintUniverse enumeration."""

    def test_symmetric_template(self):
        """Test a symmetric relation appears once per variable pair."""
        neq = ConstraintTemplate.from_predicate("neq", 2, 2, lambda v: v[0] != v[1])
        assert len(ConstraintUniverse(4, TemplateSet.of(neq))) == 6

    def test_asymmetric_template(self, implies_template):
        """Test both orientations of an asymmetric relation are kept."""
        assert len(ConstraintUniverse(4, TemplateSet.of(implies_template))) == 12

    def test_unsigned_or(self):
        """Test unsigned 2-OR gives one constraint per pair."""
        assert len(ConstraintUniverse(3, TemplateSet.of(_or()))) == 3

    def test_signed_or(self):
        """Test signed 2-OR gives four clauses per pair."""
        universe = ConstraintUniverse(3, TemplateSet.of(_or()), signed=True)
        assert len(universe) == 12
        assert len({c.key() for c in universe}) == 12

    def test_too_few_variables(self):
        """Test n < k is rejected."""
        with pytest.raises(InvalidUniverse):
            ConstraintUniverse(2, TemplateSet.of(_or(3)))

    def test_for_formula(self):
        """Test signed formulas get a signed universe."""
        universe = ConstraintUniverse.for_formula(ksat(3, [(1, -2, 3)]))
        assert universe.signed
        assert len(universe) == 8

    def test_index(self):
        """Test the key index points back at members."""
        universe = ConstraintUniverse(3, TemplateSet.of(_or()))
        for i, c in enumerate(universe):
            assert universe.index[c.key()] == i

    def test_universe_enumerate(self, implies_template):
        """Test enumeration yields each member once, with no semantic duplicates."""
        universe = ConstraintUniverse(3, TemplateSet.of(implies_template))
        members = list(universe_enumerate(universe))
        assert len(members) == len(universe) == 6
        assert len({c.key() for c in members}) == 6


class TestGraph:
    """Test Graph and Hypergraph."""

    def test_from_edges_normalizes(self):
        """Test edges are stored with the smaller endpoint first."""
        g = Graph.from_edges(3, [(2, 0), (1, 2)])
        assert g.sorted_edges() == [(0, 2), (1, 2)]
        assert g.has_edge(2, 0)
        assert g.mean_degree == pytest.approx(4 / 3)

    def test_self_loop(self):
        """Test self-loops are rejected."""
        with pytest.raises(ValueError, match="self-loop"):
            Graph.from_edges(2, [(1, 1)])

    def test_duplicate_edge(self):
        """Test the same edge twice is rejected."""
        with pytest.raises(ValueError, match="duplicate"):
            Graph.from_edges(3, [(0, 1), (1, 0)])

    def test_components(self):
        """Test connected components are sorted."""
        g = Graph.from_edges(5, [(3, 4), (0, 2)])
        assert g.components() == [[0, 2], [1], [3, 4]]

    def test_complete(self):
        """Test the complete graph edge count."""
        assert Graph.complete(5).m == 10

    def test_coloring_formula(self, triangle):
        """Test one neq constraint per edge over three colors."""
        f = coloring_formula(triangle)
        assert f.m == 3
        assert f.t == 3
        assert f.satisfied_by(Assignment.of([0, 1, 2]))
        assert not f.satisfied_by(Assignment.of([0, 1, 1]))

    def test_hypergraph(self):
        """Test the hypergraph of a formula keeps one sorted edge per constraint."""
        h = Hypergraph.from_formula(ksat(4, [(3, 1, 2), (2, 4, 1)]))
        assert h.edges == ((0, 1, 2), (0, 1, 3))
        assert h.vertices() == frozenset(range(4))
