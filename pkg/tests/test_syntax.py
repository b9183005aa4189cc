import pytest
from hypothesis import given, settings, strategies as st

from elhlearn.syntax import (
    ABox,
    And,
    Atom,
    AtomicQuery,
    CI,
    ConceptQuery,
    ConjunctiveQuery,
    ConceptAtom,
    Exists,
    RI,
    RoleAtom,
    StructuralError,
    TBox,
    TOP,
    TerminologyError,
    Var,
    abox,
    abox_of_concept,
    canonical,
    check_disjoint_namespaces,
    concept_of_tree,
    conj,
    is_rooted,
    is_terminology,
    normalize,
    signature_of_tbox,
    size_of,
    terminology,
    tree_of_concept,
    ConceptTree,
    Signature,
)


def names(pool):
    return st.sampled_from(pool)


def concepts(depth=3):
    base = st.one_of(st.just(TOP), st.builds(Atom, names(["A", "B", "C"])))
    return st.recursive(
        base,
        lambda inner: st.one_of(
            st.builds(Exists, names(["r", "s"]), inner),
            st.builds(lambda a, b: conj(a, b), inner, inner),
        ),
        max_leaves=depth * 4,
    )


class TestSize:
    def test_top_is_one_symbol(self):
        assert size_of(TOP) == 1

    def test_existential_with_conjunction_filler(self):
        c = Exists("r", conj(Atom("A"), Atom("B")))
        assert canonical(c) == "∃r(A⊓B)"
        assert size_of(c) == 7

    def test_inclusion(self):
        assert size_of(CI(Atom("A"), Exists("r", Atom("B")))) == 6

    def test_tbox_is_sum_of_inclusions(self):
        t = TBox(frozenset({CI(Atom("A"), Exists("r", Atom("B")))}), frozenset({RI("r", "s")}))
        assert size_of(t) == 6 + 3

    def test_abox_counts(self):
        a = abox(concepts=[("A", "x")], roles=[("r", "x", "y")], declared=["z"])
        assert size_of(a) == 4 + 6 + 1

    def test_query_sizes(self):
        assert size_of(AtomicQuery("A", ("a",))) == 4
        assert size_of(AtomicQuery("r", ("a", "b"))) == 6
        assert size_of(ConceptQuery(Exists("r", Atom("B")), "a")) == 4 + 3


class TestTreeEncoding:
    def test_top_tree(self):
        t = tree_of_concept(TOP)
        assert t.node_count() == 1 and t.labels[t.root] == frozenset()

    def test_exists_tree(self):
        t = tree_of_concept(Exists("r", Atom("A")))
        assert t.node_count() == 2
        assert t.children(t.root) == [(1, "r")]
        assert t.labels[1] == frozenset({"A"})

    def test_duplicate_conjuncts_keep_two_subtrees(self):
        c = conj(conj(Atom("A"), Exists("r", Atom("B"))), Exists("r", Atom("B")))
        t = tree_of_concept(c)
        assert t.labels[t.root] == frozenset({"A"})
        kids = t.children(t.root)
        assert len(kids) == 2 and all(role == "r" for _, role in kids)
        for node, _ in kids:
            assert t.labels[node] == frozenset({"B"})

    def test_single_node_decodes_to_top(self):
        assert concept_of_tree(ConceptTree((frozenset(),), ())) == TOP

    def test_labelled_edge_decodes(self):
        t = ConceptTree((frozenset({"A"}), frozenset({"B"})), ((0, 1, "r"),))
        assert concept_of_tree(t) == normalize(conj(Atom("A"), Exists("r", Atom("B"))))

    def test_cycle_rejected(self):
        t = ConceptTree((frozenset(), frozenset()), ((0, 1, "r"), (1, 0, "r")))
        with pytest.raises(StructuralError):
            concept_of_tree(t)

    def test_two_roots_rejected(self):
        t = ConceptTree((frozenset(), frozenset()), ())
        with pytest.raises(StructuralError):
            concept_of_tree(t)

    @given(concepts())
    @settings(max_examples=200, deadline=None)
    def test_round_trip_normalizes(self, c):
        assert concept_of_tree(tree_of_concept(c)) == normalize(c)

    @given(concepts())
    @settings(max_examples=100, deadline=None)
    def test_normalize_idempotent(self, c):
        assert normalize(normalize(c)) == normalize(c)


class TestAboxEncoding:
    def test_atom(self):
        a, root = abox_of_concept(Atom("A"))
        assert a.concept_assertions == frozenset({("A", root)})
        assert not a.role_assertions

    def test_chain(self):
        a, root = abox_of_concept(Exists("r", Exists("s", Atom("B"))))
        assert len(a.role_assertions) == 2
        assert ("B", "x2") in a.concept_assertions
        assert root == "x0"

    def test_top_declares_root(self):
        a, root = abox_of_concept(TOP)
        assert not a.concept_assertions and not a.role_assertions
        assert root in a.individuals()

    @given(concepts())
    @settings(max_examples=150, deadline=None)
    def test_tree_shaped(self, c):
        from elhlearn.learn_aq import find_cycle

        a, root = abox_of_concept(c)
        assert len(a.role_assertions) == len(a.individuals()) - 1
        assert find_cycle(a) is None


class TestTerminology:
    def test_auto_merge(self):
        t = terminology([CI(Atom("A"), Exists("r", Atom("B"))), CI(Atom("A"), Atom("C"))])
        (merged,) = [ci for ci in t.cis if isinstance(ci.lhs, Atom) and ci.lhs.name == "A"]
        assert merged.rhs == normalize(conj(Atom("C"), Exists("r", Atom("B"))))

    def test_no_merge_flag_rejects(self):
        with pytest.raises(TerminologyError):
            terminology(
                [CI(Atom("A"), Exists("r", Atom("B"))), CI(Atom("A"), Exists("s", Atom("C")))],
                auto_merge=False,
            )

    def test_complex_both_sides_rejected(self):
        with pytest.raises(TerminologyError):
            terminology([CI(Exists("r", Atom("A")), Exists("s", Atom("B")))])

    def test_is_terminology(self):
        assert is_terminology(terminology([CI(Exists("r", Atom("A")), Atom("B"))]))
        bad = TBox(
            frozenset(
                {
                    CI(Atom("A"), Exists("r", Atom("B"))),
                    CI(Atom("A"), Exists("s", Atom("C"))),
                }
            )
        )
        assert not is_terminology(bad)


class TestQueries:
    def test_rootedness(self):
        q = ConjunctiveQuery(
            ("a",),
            frozenset({Var("x"), Var("y")}),
            frozenset({RoleAtom("r", "a", Var("x")), RoleAtom("s", Var("x"), Var("y"))}),
        )
        assert is_rooted(q)
        q2 = ConjunctiveQuery(
            (), frozenset({Var("x")}), frozenset({ConceptAtom("M", Var("x"))})
        )
        assert not is_rooted(q2)

    def test_undeclared_variable_rejected(self):
        with pytest.raises(StructuralError):
            ConjunctiveQuery((), frozenset(), frozenset({ConceptAtom("M", Var("x"))}))


class TestNamespaces:
    def test_clash_detected(self):
        with pytest.raises(StructuralError):
            check_disjoint_namespaces(
                [Signature(frozenset({"A"}), frozenset({"A"}))]
            )

    def test_individual_clash(self):
        t = terminology([CI(Atom("A"), Atom("B"))])
        with pytest.raises(StructuralError):
            check_disjoint_namespaces([signature_of_tbox(t)], individuals=["A"])

    def test_clean(self):
        t = terminology([CI(Atom("A"), Atom("B"))], [RI("r", "s")])
        check_disjoint_namespaces([signature_of_tbox(t)], individuals=["a"])
