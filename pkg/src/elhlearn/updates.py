"""When does a learned hypothesis survive a change of the data instance?

Instance-query agreement carries over to a new ABox whenever every new
individual is bisimilar to an old one.  Without that guarantee the learned
left-hand sides may be too specific, so ``generalise`` weakens them:
concept names get replaced by strictly weaker names or dropped, roles by
strictly weaker roles, as long as the target still entails the inclusion.
A generalised hypothesis stays inseparable on every ABox reachable from the
fixed one by replacing single assertions along linear derivations (a name
may step to another only when that step is forced by everything above it).
"""

from __future__ import annotations

from typing import Callable, Iterator

from . import reasoner
from .learn_aq import (
    CachedOracle,
    LearnResult,
    aq_phase,
    bootstrap_atomic,
    tree_concept,
    tree_shape,
    _record_iteration,
)
from .learn_iq import (
    MAX_ITERATIONS,
    _atomic_equivalence,
    _budget_limit_iq,
    iq_step,
    role_classes,
)
from .syntax import (
    ABox,
    And,
    Atom,
    AtomicQuery,
    BudgetExceededError,
    CI,
    Concept,
    ConceptQuery,
    ConfigurationError,
    ContractViolationError,
    Exists,
    StructuralError,
    TBox,
    TOP,
    Top,
    abox_of_concept,
    canonical,
    conj,
    normalize,
    signature_of_abox,
    signature_of_tbox,
    terminology,
)


# ---------------------------------------------------------------------------
# Bisimulation-based preservation
# ---------------------------------------------------------------------------


def check_bisim_preservation(t: TBox, h: TBox, a0: ABox, a: ABox) -> bool:
    """True when the update is covered by bisimilarity with old individuals.

    Preconditions (checked): same role inclusions over the joint signature,
    and instance-query inseparability on the original ABox.
    """
    roles = signature_of_tbox(t).union(signature_of_tbox(h)).role_names
    for r in sorted(roles):
        for s in sorted(roles):
            if reasoner.entails_ri(t, r, s) != reasoner.entails_ri(h, r, s):
                raise ContractViolationError("preservation check needs equal role inclusions")
    if reasoner.inseparable(t, h, a0, reasoner.LANG_IQ) is not None:
        raise ContractViolationError(
            "preservation check needs inseparability on the original ABox"
        )
    old = reasoner.abox_interpretation(a0)
    new = reasoner.abox_interpretation(a)
    for b in sorted(a.individuals()):
        if not any(
            reasoner.bisimilar(new, b, old, c) is not None for c in sorted(a0.individuals())
        ):
            return False
    return True


# ---------------------------------------------------------------------------
# Generalisation of learned left-hand sides
# ---------------------------------------------------------------------------


def _atomic_subsumers(oracle: CachedOracle, atomic_cis: set[CI]) -> dict[str, set[str]]:
    """name -> strictly weaker names, from the learned atomic inclusions."""
    weaker: dict[str, set[str]] = {}
    entailed = {(ci.lhs.name, ci.rhs.name) for ci in atomic_cis if isinstance(ci.rhs, Atom)}
    names = {n for pair in entailed for n in pair} | set(
        oracle.framework.signature.concept_names
    )
    for b in sorted(names):
        weaker[b] = {
            b2 for b2 in names if (b, b2) in entailed and (b2, b) not in entailed
        }
    return weaker


def generalise(oracle: CachedOracle, h: TBox, atomic_cis: set[CI]) -> TBox:
    """Exhaustively weaken complex left-hand sides, membership-checked.

    Only inclusions with a concept name on the right are touched; the run
    costs a number of steps polynomial in the signature and hypothesis size.
    """
    weaker = _atomic_subsumers(oracle, atomic_cis)
    hier = TBox(frozenset(), h.ris)
    roles = sorted(oracle.framework.signature.role_names)

    def entailed_by_target(lhs: Concept, rhs_name: str) -> bool:
        enc, root = abox_of_concept(lhs)
        return oracle.membership(enc, AtomicQuery(rhs_name, (root,)))

    new_cis: set[CI] = set()
    for ci in sorted(h.cis, key=lambda x: (canonical(x.lhs), canonical(x.rhs))):
        if not isinstance(ci.rhs, Atom) or isinstance(ci.lhs, (Atom, Top)):
            # name-on-the-left inclusions (atomic ones included) stay as-is;
            # weakening them would lose the very subsumptions that make the
            # complex replacements consequence-preserving
            new_cis.add(ci)
            continue
        lhs = normalize(ci.lhs)
        rhs_name = ci.rhs.name
        steps = 0
        while True:
            steps += 1
            if steps > 10_000:
                raise BudgetExceededError("generalisation did not stabilise")
            stepped = _generalise_pass(lhs, rhs_name, weaker, hier, roles, entailed_by_target)
            if stepped is None:
                break
            lhs = stepped
        new_cis.add(CI(lhs, Atom(rhs_name)))
    return terminology(new_cis, h.ris)


def _generalise_pass(
    lhs: Concept,
    rhs_name: str,
    weaker: dict[str, set[str]],
    hier: TBox,
    roles: list[str],
    entailed_by_target: Callable[[Concept, str], bool],
) -> Concept | None:
    """One accepted replacement (concept names first, then roles), or None."""

    def candidates(c: Concept) -> Iterator[Concept]:
        if isinstance(c, Atom):
            yield TOP
            for b in sorted(weaker.get(c.name, ())):
                yield Atom(b)
        elif isinstance(c, Exists):
            for s in roles:
                if s != c.role and reasoner.entails_ri(hier, c.role, s) and not reasoner.entails_ri(hier, s, c.role):
                    yield Exists(s, c.filler)
            for inner in candidates(c.filler):
                yield Exists(c.role, inner)
        elif isinstance(c, And):
            for i, part in enumerate(c.args):
                for inner in candidates(part):
                    yield normalize(conj(*c.args[:i], inner, *c.args[i + 1 :]))

    concept_first: list[Concept] = []
    role_later: list[Concept] = []
    for cand in candidates(lhs):
        cand = normalize(cand)
        if canonical(cand) == canonical(lhs):
            continue
        (concept_first if _is_concept_name_change(lhs, cand) else role_later).append(cand)
    for cand in concept_first + role_later:
        if entailed_by_target(cand, rhs_name):
            return cand
    return None


def _is_concept_name_change(old: Concept, new: Concept) -> bool:
    from .syntax import signature_of_concept

    return signature_of_concept(old).role_names == signature_of_concept(new).role_names


# ---------------------------------------------------------------------------
# Linear derivations and the reachable ABox family
# ---------------------------------------------------------------------------


def linear_derivation(t: TBox, x: str, y: str, kind: str = "concept") -> bool:
    """x steps to y when y follows from x and dominates everything x implies."""
    sig = signature_of_tbox(t)
    if kind == "concept":
        names = sorted(sig.concept_names | {x, y})
        entails = lambda p, q: reasoner.entails_ci(t, Atom(p), Atom(q))
    elif kind == "role":
        names = sorted(sig.role_names | {x, y})
        entails = lambda p, q: reasoner.entails_ri(t, p, q)
    else:
        raise ConfigurationError(f"unknown kind {kind!r}")
    if not entails(x, y):
        return False
    return all(entails(z, y) for z in names if entails(x, z))


def _one_step_targets(t: TBox) -> tuple[dict[str, set[str]], dict[str, set[str]]]:
    sig = signature_of_tbox(t)
    cmap = {
        a: {b for b in sorted(sig.concept_names) if b != a and linear_derivation(t, a, b)}
        for a in sorted(sig.concept_names)
    }
    rmap = {
        r: {s for s in sorted(sig.role_names) if s != r and linear_derivation(t, r, s, "role")}
        for r in sorted(sig.role_names)
    }
    return cmap, rmap


def _assertion_targets(t: TBox, assertion: tuple) -> list[tuple]:
    cmap, rmap = _one_step_targets(t)
    if len(assertion) == 2:
        name, ind = assertion
        return [(b, ind) for b in sorted(cmap.get(name, ()))]
    role, x, y = assertion
    return [(s, x, y) for s in sorted(rmap.get(role, ()))]


def in_generalised_closure(t: TBox, a0: ABox, a: ABox) -> bool:
    """Is ``a`` reachable from ``a0`` by single linear-derivation replacements?

    Reachability reduces to covering: the one-step relation is transitively
    closed, so some order of replacements realizes any assignment that maps
    every original assertion onto some final assertion it can reach, hitting
    all of them.  Declared-only individuals must agree, and no step touches
    individuals.
    """
    if a.individuals() != a0.individuals():
        return False
    cmap, rmap = _one_step_targets(t)

    def reach(src: tuple, dst: tuple) -> bool:
        if src == dst:
            return True
        if len(src) != len(dst):
            return False
        if len(src) == 2:
            return src[1] == dst[1] and dst[0] in cmap.get(src[0], ())
        return src[1:] == dst[1:] and dst[0] in rmap.get(src[0], ())

    sources = sorted(a0.concept_assertions) + sorted(a0.role_assertions)
    targets = sorted(a.concept_assertions) + sorted(a.role_assertions)
    if len(targets) > len(sources):
        return False

    options = [[j for j, dst in enumerate(targets) if reach(src, dst)] for src in sources]
    if any(not opts for opts in options):
        return False

    # every source picks a reachable target; every target must be picked
    def assign(i: int, hit: set[int]) -> bool:
        if i == len(sources):
            return len(hit) == len(targets)
        remaining = len(sources) - i
        if len(targets) - len(hit) > remaining:
            return False
        for j in options[i]:
            if assign(i + 1, hit | {j}):
                return True
        return False

    return assign(0, set())


def enumerate_closure(t: TBox, a0: ABox, cap: int = 200) -> Iterator[ABox]:
    """Members of the reachable family besides ``a0`` itself, capped."""
    seen = {reasoner.abox_key(a0)}
    frontier = [a0]
    produced = 0
    while frontier and produced < cap:
        current = frontier.pop(0)
        steps: list[ABox] = []
        for ca in sorted(current.concept_assertions):
            for repl in _assertion_targets(t, ca):
                steps.append(
                    ABox(
                        (current.concept_assertions - {ca}) | {repl},
                        current.role_assertions,
                        current.declared,
                    )
                )
        for ra in sorted(current.role_assertions):
            for repl in _assertion_targets(t, ra):
                steps.append(
                    ABox(
                        current.concept_assertions,
                        (current.role_assertions - {ra}) | {repl},
                        current.declared,
                    )
                )
        for nxt in steps:
            key = reasoner.abox_key(nxt)
            if key in seen:
                continue
            seen.add(key)
            produced += 1
            yield nxt
            if produced >= cap:
                return
            frontier.append(nxt)


# ---------------------------------------------------------------------------
# Learning that survives updates
# ---------------------------------------------------------------------------


def _failing_atom(oracle: CachedOracle, h: TBox, a: ABox, concept, ind: str) -> str | None:
    from .syntax import top_atoms

    if isinstance(concept, Atom):
        concept_atoms = [concept.name]
    else:
        concept_atoms = sorted(top_atoms(concept))
    for name in concept_atoms:
        if not oracle.holds_locally(h, a, AtomicQuery(name, (ind,))):
            return name
    return None


def _atomic_repair(oracle: CachedOracle, h: TBox, a: ABox, name: str, ind: str) -> TBox:
    """Atomic counterexample over an updated ABox: learn a tree inclusion there.

    A replaced assertion can become derivable rather than asserted, which the
    fixed-ABox run never had to cover, so the tree loop reruns on the update.
    """
    shaped, (wname, wind) = tree_shape(oracle, a, h)
    if wind not in a.individuals():
        raise StructuralError("witness individual must come from the updated ABox")
    concept = tree_concept(shaped, wind)
    return terminology(set(h.cis) | {CI(concept, Atom(wname))}, h.ris)


def learn_with_updates(session) -> LearnResult:
    """Learn, generalise, then accept counterexamples over updated ABoxes."""
    a0 = session.framework.fixed_abox
    sig_t = session.framework.signature
    sig_a = signature_of_abox(a0)
    if not (
        sig_t.concept_names <= sig_a.concept_names and sig_t.role_names <= sig_a.role_names
    ):
        raise ConfigurationError("update learning needs the TBox signature inside the ABox's")
    oracle = CachedOracle(session)
    result = LearnResult(TBox())
    atomic_cis, ris = bootstrap_atomic(oracle)
    classes = role_classes(frozenset(ris), oracle.framework.signature.role_names)
    equivalent_names = _atomic_equivalence(atomic_cis)
    h = terminology(atomic_cis, ris)
    _record_iteration(result, oracle, h)
    h = aq_phase(oracle, h, result, use_eq=False)
    h = generalise(oracle, h, atomic_cis)
    _record_iteration(result, oracle, h)

    iterations = 0
    while True:
        limit = _budget_limit_iq(oracle, h)
        if oracle.session.mq_input_size_sum + oracle.session.eq_input_size_sum > limit:
            raise BudgetExceededError(f"query budget {limit} exceeded", partial=h)
        iterations += 1
        if iterations > MAX_ITERATIONS:
            raise BudgetExceededError("update loop exceeded its budget", partial=h)
        hit = oracle.inseparability(h)
        if hit is None:
            result.hypothesis = h
            return result
        a, q = hit
        if isinstance(q, AtomicQuery) and len(q.args) == 1:
            q = ConceptQuery(Atom(q.pred), q.args[0])
        if not isinstance(q, ConceptQuery):
            raise StructuralError(f"unexpected counterexample {q!r}")
        concept = classes.rewrite(normalize(q.concept))
        atom = _failing_atom(oracle, h, a, concept, q.ind)
        if atom is not None:
            h = _atomic_repair(oracle, h, a, atom, q.ind)
            h = generalise(oracle, h, atomic_cis)
        else:
            h = iq_step(oracle, h, classes, equivalent_names, a, concept, q.ind)
        _record_iteration(result, oracle, h)
