"""Learning all atomic-query consequences of a hidden terminology.

The loop receives (or, in membership-only mode, enumerates) atomic
counterexamples over the fixed ABox, shapes the ABox into a tree by
alternating minimization with cycle unfolding, reads the tree off as a
concept ``C`` and adds ``C [= B`` to the hypothesis.  Every addition is a
consequence of the target, so the hypothesis is positive bounded throughout.

``unfold_cycle`` doubles one undirected cycle: it opens the cycle at one
assertion, copies the cycle nodes (copies keep their labels, their edges to
each other and their edges out of the cycle) and closes the two halves into
a cycle of twice the length.  Minimization then deletes individuals and role
assertions while the membership oracle still confirms the chosen positive
example, trying copies before original individuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import reasoner
from .syntax import (
    ABox,
    Atom,
    AtomicQuery,
    BudgetExceededError,
    CI,
    Concept,
    ConceptQuery,
    Query,
    RI,
    Signature,
    StructuralError,
    TBox,
    concept_of_tree,
    ConceptTree,
    size_of,
    terminology,
)

# monitored budget: total oracle input size must stay under
# COEFF * (|target hypothesis bound| + |fixed abox| + largest counterexample)^DEGREE
BUDGET_DEGREE_AQ = 3
BUDGET_COEFF = 300


@dataclass
class IterationStat:
    mq_count: int
    eq_count: int
    input_size_total: int
    hypothesis_size: int


@dataclass
class LearnResult:
    hypothesis: TBox
    iterations: list[IterationStat] = field(default_factory=list)
    conversions: int = 0

    def iteration_count(self) -> int:
        return len(self.iterations)


class CachedOracle:
    """Memoizing front for a session: repeat questions cost nothing."""

    def __init__(self, session):
        self.session = session
        self._mq: dict[tuple, bool] = {}
        self.cache = reasoner.ModelCache()

    @property
    def framework(self):
        return self.session.framework

    def membership(self, a: ABox, q: Query) -> bool:
        key = (reasoner.abox_key(a), repr(q))
        if key not in self._mq:
            self._mq[key] = self.session.membership(a, q)
        return self._mq[key]

    def inseparability(self, hypothesis: TBox):
        return self.session.inseparability(hypothesis)

    def holds_locally(self, h: TBox, a: ABox, q: Query) -> bool:
        return reasoner.answers_query(h, a, q, self.cache)


def bootstrap_atomic(oracle: CachedOracle) -> tuple[set[CI], set[RI]]:
    """All name-to-name inclusions the target entails, found with memberships."""
    sig = oracle.framework.signature
    cis: set[CI] = set()
    ris: set[RI] = set()
    for a in sorted(sig.concept_names):
        for b in sorted(sig.concept_names):
            if a == b:
                continue
            ab = ABox(frozenset({(a, "p0")}), frozenset(), frozenset())
            if oracle.membership(ab, AtomicQuery(b, ("p0",))):
                cis.add(CI(Atom(a), Atom(b)))
    for r in sorted(sig.role_names):
        for s in sorted(sig.role_names):
            if r == s:
                continue
            ab = ABox(frozenset(), frozenset({(r, "p0", "p1")}), frozenset())
            if oracle.membership(ab, AtomicQuery(s, ("p0", "p1"))):
                ris.add(RI(r, s))
    return cis, ris


def _individual_order(a: ABox, originals: frozenset[str]) -> list[str]:
    """Unfolding copies first, original individuals last."""
    inds = sorted(a.individuals())
    return [i for i in inds if i not in originals] + [i for i in inds if i in originals]


def saturate_with_hypothesis(h: TBox, a: ABox, sig: Signature, cache) -> ABox:
    """Add every hypothesis-entailed assertion over the signature and inds."""
    model = cache.get(h, a) if cache else reasoner.build_model(h, a)
    concepts = set(a.concept_assertions)
    for ind in a.individuals():
        for name in sorted(sig.concept_names):
            if name in model.labels[("n", ind)]:
                concepts.add((name, ind))
    roles = set(a.role_assertions)
    for s, x, y in a.role_assertions:
        for r in reasoner.superroles(h, s):
            if r in sig.role_names:
                roles.add((r, x, y))
    return ABox(frozenset(concepts), frozenset(roles), a.declared)


def minimize_abox(
    oracle: CachedOracle,
    a: ABox,
    h: TBox,
    originals: frozenset[str],
) -> tuple[ABox, tuple[str, str] | None]:
    """Saturate, then shrink while one positive example keeps holding.

    Returns the minimized ABox and the witness ``(conceptName, individual)``
    pair that drove the minimization, or None when nothing separates.
    """
    sig = oracle.framework.signature
    a = saturate_with_hypothesis(h, a, sig, oracle.cache)

    # pick the first separating pair, preferring original individuals
    witness: tuple[str, str] | None = None
    candidates = [i for i in sorted(a.individuals()) if i in originals]
    candidates += [i for i in sorted(a.individuals()) if i not in originals]
    for name in sorted(sig.concept_names):
        for ind in candidates:
            q = AtomicQuery(name, (ind,))
            if oracle.holds_locally(h, a, q):
                continue
            if oracle.membership(a, q):
                witness = (name, ind)
                break
        if witness:
            break
    if witness is None:
        return a, None

    name, ind = witness
    q = AtomicQuery(name, (ind,))

    def keep_witness(smaller: ABox) -> ABox:
        # the witness individual stays alive even if all its assertions go
        return ABox(
            smaller.concept_assertions, smaller.role_assertions, smaller.declared | {ind}
        )

    changed = True
    while changed:
        changed = False
        for b in _individual_order(a, originals):
            if b == ind:
                continue
            smaller = keep_witness(a.without_individual(b))
            if oracle.membership(smaller, q):
                a = smaller
                changed = True
        for ra in sorted(a.role_assertions):
            smaller = keep_witness(a.without_role_assertion(ra))
            if oracle.membership(smaller, q):
                a = smaller
                changed = True
    return a, witness


Cycle = list[tuple[str, tuple[str, str, str], bool]]
"""Steps ``(start_node, assertion, forward)`` walking an undirected cycle."""


def find_cycle(a: ABox) -> Cycle | None:
    """Shortest undirected cycle through distinct assertions, if any.

    Every cycle contains some assertion e, and the shortest one through e is
    the shortest path between e's endpoints that avoids e, closed by e.
    """
    edges: list[tuple[str, str, str]] = sorted(a.role_assertions)
    adj: dict[str, list[tuple[tuple[str, str, str], str, bool]]] = {}
    for e in edges:
        r, x, y = e
        adj.setdefault(x, []).append((e, y, True))
        adj.setdefault(y, []).append((e, x, False))
    for node in adj:
        adj[node].sort()

    def shortest_path(src: str, dst: str, banned) -> Cycle | None:
        if src == dst:
            return []
        parent: dict[str, tuple[str, tuple[str, str, str], bool]] = {}
        queue = [src]
        seen = {src}
        while queue:
            node = queue.pop(0)
            for e, nxt, fwd in adj.get(node, []):
                if e == banned or nxt in seen:
                    continue
                parent[nxt] = (node, e, fwd)
                if nxt == dst:
                    steps: Cycle = []
                    cur = dst
                    while cur != src:
                        prev, pe, pfwd = parent[cur]
                        steps.append((prev, pe, pfwd))
                        cur = prev
                    return steps[::-1]
                seen.add(nxt)
                queue.append(nxt)
        return None

    best: Cycle | None = None
    for e in edges:
        r, x, y = e
        path = shortest_path(x, y, banned=e)
        if path is None:
            continue
        cand = path + [(y, e, False)] if path else [(x, e, True)]
        if x == y:
            cand = [(x, e, True)]
        if best is None or len(cand) < len(best) or (len(cand) == len(best) and cand < best):
            best = cand
    if best is None:
        return None
    # rotate so the first step is a forward assertion leaving the start node
    for i, (_, e, fwd) in enumerate(best):
        if fwd:
            return best[i:] + best[:i]
    # all steps are backwards: walk the cycle in the other direction
    rev: Cycle = []
    n = len(best)
    for i in range(n - 1, -1, -1):
        node, e, fwd = best[i]
        nxt = best[(i + 1) % n][0]
        rev.append((nxt, e, not fwd))
    for i, (_, e, fwd) in enumerate(rev):
        if fwd:
            return rev[i:] + rev[:i]
    raise StructuralError("cycle with no usable orientation")


def cycle_nodes(cycle: Cycle) -> list[str]:
    return [step[0] for step in cycle]


def _validate_cycle(a: ABox, cycle: Cycle) -> None:
    if not cycle:
        raise StructuralError("empty cycle")
    assertions = [e for _, e, _ in cycle]
    if len(set(assertions)) != len(assertions):
        raise StructuralError("cycle repeats an assertion")
    for i, (node, e, fwd) in enumerate(cycle):
        r, x, y = e
        if e not in a.role_assertions:
            raise StructuralError(f"assertion {e} not in ABox")
        here, there = (x, y) if fwd else (y, x)
        if here != node:
            raise StructuralError("cycle step does not start at its node")
        nxt = cycle[(i + 1) % len(cycle)][0]
        if there != nxt:
            raise StructuralError("cycle steps do not chain")
    first = cycle[0]
    if not first[2]:
        raise StructuralError("first cycle step must be a forward assertion")


def unfold_cycle(a: ABox, cycle: Cycle) -> ABox:
    """Double one undirected cycle; see the module docstring for the steps."""
    _validate_cycle(a, cycle)
    nodes = set(cycle_nodes(cycle))
    existing = a.individuals()

    def copy_name(b: str) -> str:
        cand = f"{b}_hat"
        while cand in existing:
            cand += "x"
        return cand

    hat = {b: copy_name(b) for b in sorted(nodes)}

    opened = set(a.role_assertions)
    r1, a0, a1 = cycle[0][1]
    opened.discard((r1, a0, a1))

    concepts = set(a.concept_assertions)
    for name, ind in a.concept_assertions:
        if ind in nodes:
            concepts.add((name, hat[ind]))
    roles = set(opened)
    for r, x, y in opened:
        if x in nodes and y in nodes:
            roles.add((r, hat[x], hat[y]))
        elif x in nodes:
            roles.add((r, hat[x], y))
    roles.add((r1, a0, hat[a1]))
    roles.add((r1, hat[a0], a1))
    declared = set(a.declared) | {hat[b] for b in nodes if b in a.declared}
    return ABox(frozenset(concepts), frozenset(roles), frozenset(declared))


def tree_shape(
    oracle: CachedOracle, a: ABox, h: TBox, max_rounds: int = 10_000
) -> tuple[ABox, tuple[str, str]]:
    """Alternate minimization and unfolding until the ABox is a tree."""
    originals = a.individuals()
    a, witness = minimize_abox(oracle, a, h, originals)
    if witness is None:
        raise StructuralError("no positive example survives minimization")
    prev_count = len(a.individuals())
    rounds = 0
    while True:
        cycle = find_cycle(a)
        if cycle is None:
            return a, witness
        rounds += 1
        if rounds > max_rounds:
            raise BudgetExceededError("tree shaping did not terminate in budget")
        a = unfold_cycle(a, cycle)
        a, witness = minimize_abox(oracle, a, h, originals)
        if witness is None:
            raise StructuralError("positive example lost while unfolding")
        count = len(a.individuals())
        if count <= prev_count:
            raise StructuralError("individual count must grow between unfold rounds")
        prev_count = count


def tree_concept(a: ABox, root: str) -> Concept:
    """Read a tree-shaped ABox off as the concept rooted at ``root``."""
    inds = sorted(a.individuals())
    index = {ind: i for i, ind in enumerate(inds)}
    labels = []
    for ind in inds:
        labels.append(frozenset(n for n, i in a.concept_assertions if i == ind))
    edges = tuple((index[x], index[y], r) for r, x, y in sorted(a.role_assertions))
    tree = ConceptTree(tuple(labels), edges, index[root])
    return concept_of_tree(tree)


def _budget_limit(oracle: CachedOracle, h: TBox) -> int:
    base = (
        size_of(h)
        + size_of(oracle.framework.fixed_abox)
        + oracle.session.largest_counterexample
        + len(oracle.framework.signature.concept_names)
        + len(oracle.framework.signature.role_names)
        + 8
    )
    return BUDGET_COEFF * base**BUDGET_DEGREE_AQ


def _spent(oracle: CachedOracle) -> int:
    return oracle.session.mq_input_size_sum + oracle.session.eq_input_size_sum


def _record_iteration(result: LearnResult, oracle: CachedOracle, h: TBox) -> None:
    result.iterations.append(
        IterationStat(
            oracle.session.mq_count,
            oracle.session.eq_count,
            _spent(oracle),
            size_of(h),
        )
    )


def _next_aq_counterexample(
    oracle: CachedOracle, h: TBox, use_eq: bool
) -> tuple[ABox, str, str] | None:
    fixed = oracle.framework.fixed_abox
    if use_eq:
        hit = oracle.inseparability(h)
        if hit is None:
            return None
        a, q = hit
        if isinstance(q, AtomicQuery) and len(q.args) == 1:
            return a, q.pred, q.args[0]
        if isinstance(q, ConceptQuery) and isinstance(q.concept, Atom):
            return a, q.concept.name, q.ind
        raise StructuralError(f"atomic-language oracle returned {q!r}")
    sig = oracle.framework.signature
    for name in sorted(sig.concept_names):
        for ind in sorted(fixed.individuals()):
            q = AtomicQuery(name, (ind,))
            if oracle.holds_locally(h, fixed, q):
                continue
            if oracle.membership(fixed, q):
                return fixed, name, ind
    return None


def aq_phase(
    oracle: CachedOracle,
    h: TBox,
    result: LearnResult,
    use_eq: bool = False,
    on_tree=None,
) -> TBox:
    """Drive the atomic-counterexample loop until none remain."""
    while True:
        limit = _budget_limit(oracle, h)
        if _spent(oracle) > limit:
            raise BudgetExceededError(f"query budget {limit} exceeded", partial=h)
        hit = _next_aq_counterexample(oracle, h, use_eq)
        if hit is None:
            return h
        a, name, ind = hit
        shaped, (wname, wind) = tree_shape(oracle, a, h)
        if wind not in oracle.framework.fixed_abox.individuals():
            raise StructuralError("witness individual must come from the fixed ABox")
        if on_tree is not None:
            on_tree(shaped, wname, wind)
        concept = tree_concept(shaped, wind)
        h = terminology(set(h.cis) | {CI(concept, Atom(wname))}, h.ris)
        _record_iteration(result, oracle, h)
        if not oracle.holds_locally(h, a, AtomicQuery(wname, (wind,))):
            raise StructuralError("new inclusion failed to cover its counterexample")


def learn_aq(session, use_eq: bool = False, on_tree=None) -> LearnResult:
    """Membership-only by default; ``use_eq`` asks inseparability instead."""
    oracle = CachedOracle(session)
    result = LearnResult(TBox())
    cis, ris = bootstrap_atomic(oracle)
    h = terminology(cis, ris)
    _record_iteration(result, oracle, h)
    h = aq_phase(oracle, h, result, use_eq=use_eq, on_tree=on_tree)
    result.hypothesis = h
    return result
