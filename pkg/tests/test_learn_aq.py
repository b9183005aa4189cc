import pytest

from genkb import random_abox, random_terminology
from elhlearn.learn_aq import (
    CachedOracle,
    bootstrap_atomic,
    find_cycle,
    learn_aq,
    minimize_abox,
    tree_concept,
    tree_shape,
    unfold_cycle,
)
from elhlearn.reasoner import LANG_AQ, abox_interpretation, answers_query, entails_ci, entails_ri, inseparable, is_simulation
from elhlearn.syntax import (
    ABox,
    Atom,
    AtomicQuery,
    CI,
    Exists,
    RI,
    Signature,
    StructuralError,
    TBox,
    TOP,
    abox,
    canonical,
    size_of,
    terminology,
)
from elhlearn.teacher import Framework, OracleSession, framework_for


def session_for(t, a0, lang=LANG_AQ, **kw):
    return OracleSession(t, framework_for(t, a0, lang), **kw)


def ex1():
    t = terminology(
        [CI(Atom("B"), Exists("s", Atom("B"))), CI(Exists("r", Exists("s", Atom("B"))), Atom("A"))]
    )
    return t, abox(concepts=[("B", "b")], roles=[("r", "a", "b")])


class TestBootstrap:
    def test_atomic_ci(self):
        t = terminology([CI(Atom("A1"), Atom("A2"))])
        oracle = CachedOracle(session_for(t, abox(concepts=[("A1", "x")])))
        cis, ris = bootstrap_atomic(oracle)
        assert cis == {CI(Atom("A1"), Atom("A2"))}
        assert not ris

    def test_ri(self):
        t = terminology([], [RI("r", "s")])
        oracle = CachedOracle(session_for(t, abox(roles=[("r", "x", "y")])))
        cis, ris = bootstrap_atomic(oracle)
        assert ris == {RI("r", "s")}
        assert not cis

    def test_complex_rhs_is_not_atomic(self):
        t = terminology([CI(Atom("A1"), Exists("r1", Atom("A2")))])
        oracle = CachedOracle(session_for(t, abox(concepts=[("A1", "x")])))
        cis, ris = bootstrap_atomic(oracle)
        assert not cis and not ris


class TestUnfold:
    def test_two_cycle_becomes_four_cycle(self):
        a = abox(roles=[("r", "a", "b"), ("r", "b", "a")])
        out = unfold_cycle(a, find_cycle(a))
        assert len(out.individuals()) == 4
        assert len(out.role_assertions) == 4
        assert find_cycle(out) is not None  # still one cycle, twice as long

    def test_self_loop_becomes_two_cycle(self):
        a = abox(roles=[("r", "a", "a")])
        out = unfold_cycle(a, find_cycle(a))
        assert sorted(out.role_assertions) == [("r", "a", "a_hat"), ("r", "a_hat", "a")]

    def test_labels_and_external_edges_copied(self):
        a = abox(
            concepts=[("A", "a")],
            roles=[("r", "a", "b"), ("s", "b", "a"), ("u", "a", "ext")],
        )
        out = unfold_cycle(a, find_cycle(a))
        assert ("A", "a_hat") in out.concept_assertions
        assert ("u", "a_hat", "ext") in out.role_assertions

    def test_unfolding_admits_simulation_and_homomorphism(self):
        a = abox(concepts=[("A", "a")], roles=[("r", "a", "b"), ("s", "b", "a")])
        out = unfold_cycle(a, find_cycle(a))
        sim = {(i, i) for i in a.individuals()}
        sim |= {(i, f"{i}_hat") for i in a.individuals() if f"{i}_hat" in out.individuals()}
        assert is_simulation(sim, abox_interpretation(a), abox_interpretation(out))
        collapse = {(i, i.replace("_hat", "")) for i in out.individuals()}
        assert is_simulation(collapse, abox_interpretation(out), abox_interpretation(a))

    def test_not_a_cycle_rejected(self):
        a = abox(roles=[("r", "a", "b")])
        with pytest.raises(StructuralError):
            unfold_cycle(a, [("a", ("r", "a", "b"), True)])

    def test_parallel_edges_count_as_cycle(self):
        a = abox(roles=[("r", "a", "b"), ("s", "a", "b")])
        cyc = find_cycle(a)
        assert cyc is not None and len(cyc) == 2

    def test_tree_has_no_cycle(self):
        assert find_cycle(abox(roles=[("r", "a", "b"), ("s", "a", "c")])) is None


class TestMinimize:
    def test_removes_irrelevant_individual(self):
        t = terminology([CI(Exists("r", Atom("B")), Atom("A"))])
        a = abox(concepts=[("B", "b"), ("C1", "c")], roles=[("r", "a", "b")])
        oracle = CachedOracle(
            OracleSession(
                t,
                Framework(
                    a,
                    LANG_AQ,
                    Signature(frozenset({"A", "B", "C1"}), frozenset({"r"})),
                ),
            )
        )
        out, witness = minimize_abox(oracle, a, TBox(), a.individuals())
        assert witness == ("A", "a")
        assert "c" not in out.individuals()

    def test_nothing_removable(self):
        t, a0 = ex1()
        oracle = CachedOracle(session_for(t, a0))
        out, witness = minimize_abox(oracle, a0, TBox(), a0.individuals())
        assert witness == ("A", "a")
        assert out.individuals() == {"a", "b"}

    def test_no_witness_when_hypothesis_covers(self):
        t, a0 = ex1()
        oracle = CachedOracle(session_for(t, a0))
        h = terminology([CI(Exists("r", Atom("B")), Atom("A"))])
        out, witness = minimize_abox(oracle, a0, h, a0.individuals())
        assert witness is None


class TestTreeShape:
    def test_already_tree(self):
        t, a0 = ex1()
        oracle = CachedOracle(session_for(t, a0))
        shaped, witness = tree_shape(oracle, a0, TBox())
        assert find_cycle(shaped) is None
        assert witness == ("A", "a")

    def test_self_loop_unfolds(self):
        t = terminology([CI(Exists("r1", Exists("r1", TOP)), Atom("A1"))])
        a0 = abox(roles=[("r1", "c", "c")])
        oracle = CachedOracle(session_for(t, a0))
        shaped, (name, ind) = tree_shape(oracle, a0, TBox())
        assert find_cycle(shaped) is None
        assert name == "A1" and ind == "c"
        assert len(shaped.individuals()) > 1  # grew past the loop

    def test_individual_counts_grow_and_stay_bounded(self):
        for seed in range(40):
            t = random_terminology(seed)
            a0 = random_abox(seed, t)
            oracle = CachedOracle(session_for(t, a0))
            counts = []
            orig = tree_shape.__wrapped__ if hasattr(tree_shape, "__wrapped__") else None
            try:
                shaped, witness = tree_shape(oracle, a0, TBox())
            except StructuralError:
                continue  # no counterexample on this seed
            assert len(shaped.individuals()) <= size_of(t)


class TestLearnAq:
    def test_atomic_target(self):
        t = terminology([CI(Atom("B"), Atom("A"))], [RI("r", "s")])
        a0 = abox(concepts=[("B", "b")])
        res = learn_aq(session_for(t, a0))
        assert entails_ci(res.hypothesis, Atom("B"), Atom("A"))
        assert entails_ri(res.hypothesis, "r", "s")
        assert inseparable(t, res.hypothesis, a0, LANG_AQ) is None

    def test_example_target_learns_shorter_left_side(self):
        t, a0 = ex1()
        res = learn_aq(session_for(t, a0))
        assert CI(Exists("r", Atom("B")), Atom("A")) in res.hypothesis.cis
        assert inseparable(t, res.hypothesis, a0, LANG_AQ) is None

    def test_empty_target(self):
        fw = Framework(
            abox(concepts=[("B", "b")]),
            LANG_AQ,
            Signature(frozenset({"A", "B"}), frozenset({"r"})),
        )
        res = learn_aq(OracleSession(TBox(), fw))
        assert res.hypothesis.cis == frozenset()

    def test_mq_only_mode_uses_no_eq(self):
        t, a0 = ex1()
        sess = session_for(t, a0)
        learn_aq(sess, use_eq=False)
        assert sess.eq_count == 0

    def test_eq_mode_converges_to_same_consequences(self):
        for seed in range(25):
            t = random_terminology(seed)
            a0 = random_abox(seed, t)
            h1 = learn_aq(session_for(t, a0), use_eq=False).hypothesis
            h2 = learn_aq(session_for(t, a0), use_eq=True).hypothesis
            assert inseparable(t, h1, a0, LANG_AQ) is None
            assert inseparable(t, h2, a0, LANG_AQ) is None
            assert inseparable(h1, h2, a0, LANG_AQ) is None

    def test_positive_bounded(self):
        for seed in range(25):
            t = random_terminology(seed)
            a0 = random_abox(seed, t)
            res = learn_aq(session_for(t, a0))
            for ci in res.hypothesis.cis:
                assert entails_ci(t, ci.lhs, ci.rhs)
            for ri in res.hypothesis.ris:
                assert entails_ri(t, ri.lhs, ri.rhs)

    def test_each_iteration_adds_a_covering_inclusion(self):
        # per iteration: target entails the witness fact, the old hypothesis
        # does not, and the extended hypothesis does
        from elhlearn.learn_aq import aq_phase, tree_shape, tree_concept, _record_iteration, LearnResult
        from elhlearn.reasoner import answers_query

        for seed in range(20):
            t = random_terminology(seed)
            a0 = random_abox(seed, t)
            sess = session_for(t, a0)
            oracle = CachedOracle(sess)
            cis, ris = bootstrap_atomic(oracle)
            h = terminology(cis, ris)
            sig = oracle.framework.signature
            for _ in range(200):
                hit = None
                for nm in sorted(sig.concept_names):
                    for ind in sorted(a0.individuals()):
                        q = AtomicQuery(nm, (ind,))
                        if not oracle.holds_locally(h, a0, q) and oracle.membership(a0, q):
                            hit = (nm, ind)
                            break
                    if hit:
                        break
                if hit is None:
                    break
                shaped, (wname, wind) = tree_shape(oracle, a0, h)
                fact = AtomicQuery(wname, (wind,))
                assert answers_query(t, a0, fact)
                assert not answers_query(h, a0, fact)
                h = terminology(set(h.cis) | {CI(tree_concept(shaped, wind), Atom(wname))}, h.ris)
                assert answers_query(h, a0, fact)
            assert inseparable(t, h, a0, LANG_AQ) is None

    def test_top_only_inclusion_learnable(self):
        t = terminology([CI(TOP, Atom("A1"))])
        a0 = abox(declared=["c"], concepts=[("A2", "d")])
        fw = Framework(a0, LANG_AQ, Signature(frozenset({"A1", "A2"}), frozenset()))
        res = learn_aq(OracleSession(t, fw))
        assert inseparable(t, res.hypothesis, a0, LANG_AQ) is None
        assert answers_query(res.hypothesis, a0, AtomicQuery("A1", ("c",)))
