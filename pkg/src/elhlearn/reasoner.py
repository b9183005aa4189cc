"""Entailment, canonical models, simulations and inseparability for ELH.

The least model of a knowledge base is generally infinite, but its anonymous
part realizes only finitely many element types: one per filler of an
existential occurring (at any depth) on the right-hand side of an inclusion
with a concept name on the left.  ``build_model`` computes this finite
presentation.  Named individuals keep their asserted structure, closed under
role inclusions; each anonymous type carries a saturated label and a list of
outgoing edges.  Every edge records the full set of roles it carries (the
closure of the role that introduced it), because conjunctive queries can
constrain several roles between the same pair of elements while instance
queries cannot.

Unravelling the presentation from the named individuals reproduces the least
model, so instance checking is plain recursive concept evaluation on the
finite graph, rooted conjunctive queries match into a depth-bounded
unravelling (a match moves at most one step away from the named part per
query term), and query inseparability reduces to label agreement plus mutual
(bundle) simulations anchored at each individual.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence, Union

from .syntax import (
    ABox,
    And,
    Atom,
    AtomicQuery,
    Concept,
    ConceptAtom,
    ConceptQuery,
    ConjunctiveQuery,
    Exists,
    Query,
    QueryAtom,
    RoleAtom,
    RoleQuery,
    Signature,
    TBox,
    Term,
    Top,
    UnsupportedQueryError,
    Var,
    abox_of_concept,
    canonical,
    conj,
    is_existential_atom_query,
    is_rooted,
    is_terminology,
    normalize,
    signature_of_abox,
    signature_of_tbox,
    top_atoms,
    top_existentials,
)
from .syntax import ContractViolationError

# ---------------------------------------------------------------------------
# Role hierarchy
# ---------------------------------------------------------------------------


def superroles(t: TBox, role: str) -> frozenset[str]:
    """Reflexive-transitive closure of the role inclusions above ``role``."""
    out = {role}
    frontier = [role]
    while frontier:
        r = frontier.pop()
        for ri in t.ris:
            if ri.lhs == r and ri.rhs not in out:
                out.add(ri.rhs)
                frontier.append(ri.rhs)
    return frozenset(out)


def entails_ri(t: TBox, sub: str, sup: str) -> bool:
    return sup in superroles(t, sub)


# ---------------------------------------------------------------------------
# Interpretations (finite, explicit)
# ---------------------------------------------------------------------------


@dataclass
class Interpretation:
    """Explicit finite interpretation with an individual assignment."""

    domain: frozenset
    concept_ext: dict[str, frozenset]
    role_ext: dict[str, frozenset]
    ind_map: dict[str, object] = field(default_factory=dict)

    def elements(self) -> Iterable:
        return self.domain

    def label_of(self, el) -> frozenset[str]:
        return frozenset(a for a, ext in self.concept_ext.items() if el in ext)

    def successors(self, el) -> list[tuple[frozenset[str], object]]:
        per_target: dict[object, set[str]] = {}
        for r, ext in self.role_ext.items():
            for d, e in ext:
                if d == el:
                    per_target.setdefault(e, set()).add(r)
        return sorted(
            ((frozenset(rs), tgt) for tgt, rs in per_target.items()),
            key=lambda it: (sorted(it[0]), repr(it[1])),
        )


def abox_interpretation(a: ABox) -> Interpretation:
    concept_ext: dict[str, set] = {}
    for name, ind in a.concept_assertions:
        concept_ext.setdefault(name, set()).add(ind)
    role_ext: dict[str, set] = {}
    for role, x, y in a.role_assertions:
        role_ext.setdefault(role, set()).add((x, y))
    inds = a.individuals()
    return Interpretation(
        frozenset(inds),
        {k: frozenset(v) for k, v in concept_ext.items()},
        {k: frozenset(v) for k, v in role_ext.items()},
        {i: i for i in inds},
    )


# ---------------------------------------------------------------------------
# Regular presentation of the least model
# ---------------------------------------------------------------------------

NamedEl = tuple[Literal["n"], str]
AnonEl = tuple[Literal["a"], str]  # keyed by canonical filler serialization
Element = Union[NamedEl, AnonEl]
Edge = tuple[frozenset[str], Element]


@dataclass
class RegularModel:
    """Finite presentation of the least model of ``(tbox, abox)``.

    ``labels`` maps every element to its saturated set of concept names and
    ``edges`` lists outgoing ``(role set, target)`` bundles.  Anonymous
    elements stand for whole families of elements of the least model, one
    per path that reaches them from the named part.
    """

    tbox: TBox
    abox: ABox
    labels: dict[Element, frozenset[str]]
    edges: dict[Element, tuple[Edge, ...]]
    fillers: dict[str, Concept]

    def named(self, ind: str) -> NamedEl:
        return ("n", ind)

    def has_individual(self, ind: str) -> bool:
        return ("n", ind) in self.labels

    def elements(self) -> Iterable[Element]:
        return self.labels.keys()

    def label_of(self, el: Element) -> frozenset[str]:
        return self.labels[el]

    def successors(self, el: Element) -> tuple[Edge, ...]:
        return self.edges[el]

    def reachable(self) -> list[Element]:
        """Elements reachable from the named part, named part included."""
        frontier = [e for e in self.labels if e[0] == "n"]
        seen = set(frontier)
        while frontier:
            el = frontier.pop()
            for _, tgt in self.edges[el]:
                if tgt not in seen:
                    seen.add(tgt)
                    frontier.append(tgt)
        return sorted(seen)


def _existential_fillers(t: TBox) -> dict[str, Concept]:
    """Fillers of existentials nested in right-hand sides of name-lhs CIs."""
    out: dict[str, Concept] = {}

    def walk(c: Concept) -> None:
        if isinstance(c, Exists):
            key = canonical(c.filler)
            if key not in out:
                out[key] = c.filler
                walk(c.filler)
        elif isinstance(c, And):
            for a in c.args:
                walk(a)

    for ci in t.cis:
        if isinstance(ci.lhs, (Atom, Top)):
            walk(ci.rhs)
    return out


def _eval_concept(
    labels: dict[Element, frozenset[str] | set[str]],
    edges: dict[Element, Sequence[Edge]],
    el: Element,
    c: Concept,
) -> bool:
    if isinstance(c, Top):
        return True
    if isinstance(c, Atom):
        return c.name in labels[el]
    if isinstance(c, And):
        return all(_eval_concept(labels, edges, el, a) for a in c.args)
    if isinstance(c, Exists):
        for roles, tgt in edges[el]:
            if c.role in roles and _eval_concept(labels, edges, tgt, c.filler):
                return True
        return False
    raise TypeError(f"not a concept: {c!r}")


def build_model(t: TBox, a: ABox) -> RegularModel:
    """Saturate the regular presentation of the least model of ``(t, a)``."""
    if not is_terminology(t):
        raise ContractViolationError("model construction expects a terminology")
    fillers = _existential_fillers(t)

    labels: dict[Element, set[str]] = {}
    edges: dict[Element, list[Edge]] = {}

    for key, f in fillers.items():
        el: Element = ("a", key)
        labels[el] = set(top_atoms(f))
        edges[el] = []
        for ex in top_existentials(f):
            edge = (superroles(t, ex.role), ("a", canonical(ex.filler)))
            if edge not in edges[el]:
                edges[el].append(edge)

    for ind in sorted(a.individuals()):
        el = ("n", ind)
        labels[el] = {n for n, i in a.concept_assertions if i == ind}
        edges[el] = []
    pair_roles: dict[tuple[str, str], set[str]] = {}
    for role, x, y in a.role_assertions:
        pair_roles.setdefault((x, y), set()).update(superroles(t, role))
    for (x, y), roles in sorted(pair_roles.items()):
        edges[("n", x)].append((frozenset(roles), ("n", y)))

    name_cis = sorted(
        (ci for ci in t.cis if isinstance(ci.lhs, (Atom, Top))),
        key=lambda ci: (canonical(ci.lhs), canonical(ci.rhs)),
    )
    complex_cis = sorted(
        (ci for ci in t.cis if not isinstance(ci.lhs, (Atom, Top))),
        key=lambda ci: (canonical(ci.lhs), canonical(ci.rhs)),
    )

    def fire(el: Element) -> bool:
        changed = False
        for ci in name_cis:
            applies = isinstance(ci.lhs, Top) or ci.lhs.name in labels[el]
            if not applies:
                continue
            for name in top_atoms(ci.rhs):
                if name not in labels[el]:
                    labels[el].add(name)
                    changed = True
            for ex in top_existentials(ci.rhs):
                edge = (superroles(t, ex.role), ("a", canonical(ex.filler)))
                if edge not in edges[el]:
                    edges[el].append(edge)
                    changed = True
        for ci in complex_cis:
            name = ci.rhs.name  # terminology: complex lhs forces atomic rhs
            if name not in labels[el] and _eval_concept(labels, edges, el, ci.lhs):
                labels[el].add(name)
                changed = True
        return changed

    order = sorted(labels)
    while True:
        if not any(fire(el) for el in order):
            break

    return RegularModel(
        t,
        a,
        {el: frozenset(ls) for el, ls in labels.items()},
        {el: tuple(es) for el, es in edges.items()},
        fillers,
    )


class ModelCache:
    """Small keyed cache of regular models; learners hit the same KB a lot."""

    def __init__(self, limit: int = 512):
        self.limit = limit
        self._store: dict[tuple, RegularModel] = {}

    def get(self, t: TBox, a: ABox) -> RegularModel:
        key = (kb_key(t), abox_key(a))
        model = self._store.get(key)
        if model is None:
            model = build_model(t, a)
            if len(self._store) >= self.limit:
                self._store.clear()
            self._store[key] = model
        return model


def kb_key(t: TBox) -> tuple:
    return (
        tuple(sorted(f"{canonical(ci.lhs)}|{canonical(ci.rhs)}" for ci in t.cis)),
        tuple(sorted((ri.lhs, ri.rhs) for ri in t.ris)),
    )


def abox_key(a: ABox) -> tuple:
    return (
        tuple(sorted(a.concept_assertions)),
        tuple(sorted(a.role_assertions)),
        tuple(sorted(a.individuals())),
    )


# ---------------------------------------------------------------------------
# Entailment and query answering
# ---------------------------------------------------------------------------


def canonical_abox_model(a: ABox) -> Interpretation:
    return abox_interpretation(a)


def concept_holds(model: RegularModel, ind: str, c: Concept) -> bool:
    el = model.named(ind)
    if el not in model.labels:
        # unmentioned individual: behaves like a fresh unconstrained element
        fresh = build_model(model.tbox, ABox(declared=frozenset({ind})))
        return _eval_concept(fresh.labels, fresh.edges, ("n", ind), c)
    return _eval_concept(model.labels, model.edges, el, c)


def entails_ci(t: TBox, c: Concept, d: Concept, cache: ModelCache | None = None) -> bool:
    """Subsumption via evaluation at the root of the encoding of ``c``."""
    a, root = abox_of_concept(normalize(c))
    model = cache.get(t, a) if cache else build_model(t, a)
    return concept_holds(model, root, d)


def role_assertion_holds(t: TBox, a: ABox, role: str, x: str, y: str) -> bool:
    return any(
        sx == x and sy == y and entails_ri(t, s, role) for s, sx, sy in a.role_assertions
    )


def _existential_atom_holds(model: RegularModel, name: str) -> bool:
    return any(name in model.labels[el] for el in model.reachable())


def _cq_bound(q: ConjunctiveQuery) -> int:
    return max(1, len(q.terms()))


def _cq_holds(model: RegularModel, q: ConjunctiveQuery) -> bool:
    """Backtracking match into the depth-bounded unravelling.

    Elements are either named individuals or anonymous paths anchored at a
    named individual; a rooted query only ever needs paths no longer than
    its number of terms.
    """
    bound = _cq_bound(q)

    for ind in q.individuals():
        if not model.has_individual(ind):
            return False

    # unravelled elements: ("n", a) or ("p", a, ((roles, type), ...)); the
    # edge bundle is part of the path so that distinct existentials with the
    # same filler stay distinct, as they are in the least model
    PathEl = tuple

    def label_of(el: PathEl) -> frozenset[str]:
        if el[0] == "n":
            return model.labels[("n", el[1])]
        return model.labels[("a", el[2][-1][1])]

    def successors(el: PathEl) -> list[tuple[frozenset[str], PathEl]]:
        out: list[tuple[frozenset[str], PathEl]] = []
        if el[0] == "n":
            for roles, tgt in model.edges[("n", el[1])]:
                if tgt[0] == "n":
                    out.append((roles, ("n", tgt[1])))
                else:
                    out.append((roles, ("p", el[1], ((roles, tgt[1]),))))
        else:
            path = el[2]
            if len(path) < bound:
                for roles, tgt in model.edges[("a", path[-1][1])]:
                    out.append((roles, ("p", el[1], path + ((roles, tgt[1]),))))
        return out

    # order variables so each one is introduced through an in-edge from an
    # already assigned term (rootedness guarantees such an order exists)
    role_atoms = [a for a in q.atoms if isinstance(a, RoleAtom)]
    concept_atoms = [a for a in q.atoms if isinstance(a, ConceptAtom)]
    assignment: dict[Term, PathEl] = {i: ("n", i) for i in q.individuals()}
    ordered_vars: list[Var] = []
    intro_atom: dict[Var, RoleAtom] = {}
    placed: set[Term] = set(assignment)
    pending = set(q.exist_vars)
    while pending:
        progressed = False
        for atom in role_atoms:
            if atom.subj in placed and isinstance(atom.obj, Var) and atom.obj in pending:
                ordered_vars.append(atom.obj)
                intro_atom[atom.obj] = atom
                placed.add(atom.obj)
                pending.remove(atom.obj)
                progressed = True
        if not progressed:
            raise UnsupportedQueryError("query is not rooted")

    def consistent(partial: dict[Term, PathEl]) -> bool:
        for atom in role_atoms:
            if atom.subj in partial and atom.obj in partial:
                ok = any(
                    atom.role in roles and tgt == partial[atom.obj]
                    for roles, tgt in successors(partial[atom.subj])
                )
                if not ok:
                    return False
        for atom in concept_atoms:
            if atom.term in partial and atom.name not in label_of(partial[atom.term]):
                return False
        return True

    if not consistent(assignment):
        return False

    def search(i: int) -> bool:
        if i == len(ordered_vars):
            return True
        var = ordered_vars[i]
        src = assignment[intro_atom[var].subj]
        want = intro_atom[var].role
        for roles, tgt in successors(src):
            if want not in roles:
                continue
            assignment[var] = tgt
            if consistent(assignment) and search(i + 1):
                return True
            del assignment[var]
        return False

    return search(0)


def answers_query(t: TBox, a: ABox, q: Query, cache: ModelCache | None = None) -> bool:
    """Certain-answer check for AQ, IQ, rooted CQs and the one boolean CQ."""
    if isinstance(q, AtomicQuery):
        if len(q.args) == 2:
            return role_assertion_holds(t, a, q.pred, *q.args)
        q = ConceptQuery(Atom(q.pred), q.args[0])
    if isinstance(q, RoleQuery):
        return role_assertion_holds(t, a, q.role, q.subj, q.obj)
    if isinstance(q, ConceptQuery):
        if q.ind not in a.individuals():
            a = ABox(a.concept_assertions, a.role_assertions, a.declared | {q.ind})
        model = cache.get(t, a) if cache else build_model(t, a)
        return concept_holds(model, q.ind, q.concept)
    if isinstance(q, ConjunctiveQuery):
        model = cache.get(t, a) if cache else build_model(t, a)
        if is_existential_atom_query(q):
            (atom,) = q.atoms
            return _existential_atom_holds(model, atom.name)
        if not is_rooted(q):
            raise UnsupportedQueryError(
                "only rooted conjunctive queries and a single existential "
                "concept atom are supported"
            )
        return _cq_holds(model, q)
    raise TypeError(f"not a query: {q!r}")


def abox_homomorphism(src: ABox, dst: ABox) -> dict[str, str] | None:
    """Assertion-preserving map between individual sets, or None.

    Backtracking over individuals in sorted order, candidates in sorted
    order, so the returned map is deterministic.
    """
    src_inds = sorted(src.individuals())
    dst_inds = sorted(dst.individuals())
    if src_inds and not dst_inds:
        return None
    concepts_of: dict[str, set[str]] = {i: set() for i in src_inds}
    for name, i in src.concept_assertions:
        concepts_of[i].add(name)
    mapping: dict[str, str] = {}

    def consistent(i: str, target: str) -> bool:
        for name in concepts_of[i]:
            if (name, target) not in dst.concept_assertions:
                return False
        for r, x, y in src.role_assertions:
            if x == i and y in mapping and (r, target, mapping[y]) not in dst.role_assertions:
                return False
            if y == i and x in mapping and (r, mapping[x], target) not in dst.role_assertions:
                return False
            if x == i and y == i and (r, target, target) not in dst.role_assertions:
                return False
        return True

    def search(k: int) -> bool:
        if k == len(src_inds):
            return True
        i = src_inds[k]
        for target in dst_inds:
            if consistent(i, target):
                mapping[i] = target
                if search(k + 1):
                    return True
                del mapping[i]
        return False

    return dict(mapping) if search(0) else None


# ---------------------------------------------------------------------------
# Simulations and bisimulations
# ---------------------------------------------------------------------------


def _graph(view) -> tuple[list, Callable, Callable]:
    els = sorted(view.elements(), key=repr)
    return els, view.label_of, view.successors


def _greatest_simulation(gi, gj, bundles: bool) -> set[tuple]:
    ei, li, si = _graph(gi)
    ej, lj, sj = _graph(gj)
    sim = {(d, e) for d in ei for e in ej if li(d) <= lj(e)}

    def matches(d, e) -> bool:
        for roles, d1 in si(d):
            if bundles:
                ok = any(
                    roles <= roles2 and (d1, e1) in sim for roles2, e1 in sj(e)
                )
                if not ok:
                    return False
            else:
                for r in roles:
                    ok = any(r in roles2 and (d1, e1) in sim for roles2, e1 in sj(e))
                    if not ok:
                        return False
        return True

    changed = True
    while changed:
        changed = False
        for pair in sorted(sim, key=repr):
            if not matches(*pair):
                sim.discard(pair)
                changed = True
    return sim


def simulation(gi, d, gj, e, bundles: bool = False) -> frozenset | None:
    """Greatest simulation containing ``(d, e)``, or None if there is none."""
    sim = _greatest_simulation(gi, gj, bundles)
    return frozenset(sim) if (d, e) in sim else None


def bisimilar(gi, d, gj, e) -> frozenset | None:
    """Greatest bisimulation containing ``(d, e)``, or None."""
    ei, li, si = _graph(gi)
    ej, lj, sj = _graph(gj)
    rel = {(x, y) for x in ei for y in ej if li(x) == lj(y)}

    def matches(x, y) -> bool:
        for roles, x1 in si(x):
            for r in roles:
                if not any(r in roles2 and (x1, y1) in rel for roles2, y1 in sj(y)):
                    return False
        for roles, y1 in sj(y):
            for r in roles:
                if not any(r in roles2 and (x1, y1) in rel for roles2, x1 in si(x)):
                    return False
        return True

    changed = True
    while changed:
        changed = False
        for pair in sorted(rel, key=repr):
            if not matches(*pair):
                rel.discard(pair)
                changed = True
    return frozenset(rel) if (d, e) in rel else None


def is_simulation(rel: Iterable[tuple], gi, gj) -> bool:
    """Verify the simulation conditions for an explicit relation."""
    rel = set(rel)
    if not rel:
        return False
    _, li, si = _graph(gi)
    _, lj, sj = _graph(gj)
    for d, e in rel:
        if not li(d) <= lj(e):
            return False
        for roles, d1 in si(d):
            for r in roles:
                if not any(r in roles2 and (d1, e1) in rel for roles2, e1 in sj(e)):
                    return False
    return True


# ---------------------------------------------------------------------------
# Distinguishing witnesses from failed simulations
# ---------------------------------------------------------------------------


@dataclass
class _Rounds:
    eliminated: dict[tuple, int]
    reason: dict[tuple, object]


def _elimination_rounds(gi, gj, bundles: bool) -> _Rounds:
    ei, li, si = _graph(gi)
    ej, lj, sj = _graph(gj)
    eliminated: dict[tuple, int] = {}
    reason: dict[tuple, object] = {}
    for d in ei:
        for e in ej:
            extra = sorted(li(d) - lj(e))
            if extra:
                eliminated[(d, e)] = 0
                reason[(d, e)] = ("atom", extra[0])
    alive = {(d, e) for d in ei for e in ej if (d, e) not in eliminated}
    rnd = 0
    changed = True
    while changed:
        changed = False
        rnd += 1
        for d, e in sorted(alive, key=repr):
            for roles, d1 in si(d):
                cands = sj(e)
                if bundles:
                    blocked = all(
                        not (roles <= roles2) or ((d1, e1) in eliminated)
                        for roles2, e1 in cands
                    )
                    if blocked:
                        failures = [
                            (roles2, e1) for roles2, e1 in cands if roles <= roles2
                        ]
                        eliminated[(d, e)] = rnd
                        reason[(d, e)] = ("edge", roles, d1, tuple(failures))
                        break
                else:
                    hit = False
                    for r in sorted(roles):
                        matched = any(
                            r in roles2 and (d1, e1) not in eliminated
                            for roles2, e1 in cands
                        )
                        if not matched:
                            failures = [
                                (frozenset({r}), e1)
                                for roles2, e1 in cands
                                if r in roles2
                            ]
                            eliminated[(d, e)] = rnd
                            reason[(d, e)] = ("edge", frozenset({r}), d1, tuple(failures))
                            hit = True
                            break
                    if hit:
                        break
            else:
                continue
            alive.discard((d, e))
            changed = True
    return _Rounds(eliminated, reason)


@dataclass(frozen=True)
class BundleTree:
    """Tree query with role-set labelled edges; singleton sets give a concept."""

    labels: frozenset[str]
    children: tuple[tuple[frozenset[str], "BundleTree"], ...] = ()

    def as_concept(self) -> Concept | None:
        parts: list[Concept] = [Atom(a) for a in sorted(self.labels)]
        for roles, sub in self.children:
            if len(roles) != 1:
                return None
            inner = sub.as_concept()
            if inner is None:
                return None
            (role,) = roles
            parts.append(Exists(role, inner))
        return normalize(conj(*parts))

    def as_cq(self, ind: str) -> ConjunctiveQuery:
        counter = itertools.count()
        atoms: set[QueryAtom] = set()
        variables: set[Var] = set()

        def emit(node: "BundleTree", term: Term) -> None:
            for a in sorted(node.labels):
                atoms.add(ConceptAtom(a, term))
            for roles, sub in node.children:
                v = Var(f"x{next(counter)}")
                variables.add(v)
                for r in sorted(roles):
                    atoms.add(RoleAtom(r, term, v))
                emit(sub, v)

        for a in sorted(self.labels):
            atoms.add(ConceptAtom(a, ind))
        for roles, sub in self.children:
            v = Var(f"x{next(counter)}")
            variables.add(v)
            for r in sorted(roles):
                atoms.add(RoleAtom(r, ind, v))
            emit(sub, v)
        return ConjunctiveQuery((ind,), frozenset(variables), frozenset(atoms))


def _witness(rounds: _Rounds, pair: tuple, memo: dict | None = None) -> BundleTree:
    if memo is None:
        memo = {}
    if pair in memo:
        return memo[pair]
    kind = rounds.reason[pair]
    if kind[0] == "atom":
        tree = BundleTree(frozenset({kind[1]}))
    else:
        _, roles, d1, failures = kind
        merged_labels: set[str] = set()
        children: list[tuple[frozenset[str], BundleTree]] = []
        for _, e1 in failures:
            sub = _witness(rounds, (d1, e1), memo)
            merged_labels |= sub.labels
            children.extend(sub.children)
        tree = BundleTree(
            frozenset(), ((roles, BundleTree(frozenset(merged_labels), tuple(children))),)
        )
    memo[pair] = tree
    return tree


def separating_witness(gi, d, gj, e, bundles: bool = False) -> BundleTree | None:
    """A tree query true at ``d`` in ``gi`` but not at ``e`` in ``gj``."""
    rounds = _elimination_rounds(gi, gj, bundles)
    if (d, e) not in rounds.eliminated:
        return None
    return _witness(rounds, (d, e))


# ---------------------------------------------------------------------------
# Inseparability
# ---------------------------------------------------------------------------

LANG_AQ = "aq"
LANG_IQ = "iq"
LANG_CQR = "cqr"


@dataclass(frozen=True)
class Separation:
    query: Query
    first_entails: bool  # True when the first TBox entails the query


def _aq_closure(t: TBox, a: ABox, sig: Signature, cache: ModelCache | None):
    model = cache.get(t, a) if cache else build_model(t, a)
    inds = sorted(a.individuals())
    concept_facts = {
        (name, i)
        for name in sorted(sig.concept_names)
        for i in inds
        if name in model.labels[("n", i)]
    }
    role_facts = {
        (r, x, y)
        for (s, x, y) in a.role_assertions
        for r in superroles(t, s)
        if r in sig.role_names
    }
    return concept_facts, role_facts


def inseparability_gap(
    t: TBox,
    h: TBox,
    a: ABox,
    lang: str,
    cache: ModelCache | None = None,
    limit: int | None = None,
) -> list[Separation]:
    """Deterministically ordered separating queries; empty means inseparable.

    Instance-query separations are detected per individual via mutual
    simulations between the two regular models; rooted-CQ separations use
    bundle matching, which also catches several roles forced on one edge.
    """
    sig = signature_of_tbox(t).union(signature_of_tbox(h)).union(signature_of_abox(a))
    out: list[Separation] = []

    def push(sep: Separation) -> bool:
        out.append(sep)
        return limit is not None and len(out) >= limit

    tc, tr = _aq_closure(t, a, sig, cache)
    hc, hr = _aq_closure(h, a, sig, cache)
    for name, i in sorted(tc ^ hc):
        q: Query = AtomicQuery(name, (i,))
        if push(Separation(q, (name, i) in tc)):
            return out
    for role, x, y in sorted(tr ^ hr):
        q = AtomicQuery(role, (x, y))
        if push(Separation(q, (role, x, y) in tr)):
            return out
    if lang == LANG_AQ:
        return out

    bundles = lang == LANG_CQR
    mt = cache.get(t, a) if cache else build_model(t, a)
    mh = cache.get(h, a) if cache else build_model(h, a)
    for ind in sorted(a.individuals()):
        el = ("n", ind)
        for first, gi, gj in ((True, mt, mh), (False, mh, mt)):
            witness = separating_witness(gi, el, gj, el, bundles=bundles)
            if witness is None:
                continue
            concept = witness.as_concept()
            if concept is not None:
                q = ConceptQuery(concept, ind)
            else:
                q = witness.as_cq(ind)
            if push(Separation(q, first)):
                return out
    return out


def inseparable(
    t: TBox, h: TBox, a: ABox, lang: str, cache: ModelCache | None = None
) -> Separation | None:
    """None when inseparable, else a verified separating query."""
    if lang not in (LANG_AQ, LANG_IQ, LANG_CQR):
        raise UnsupportedQueryError(f"inseparability undecided for language {lang!r}")
    gap = inseparability_gap(t, h, a, lang, cache=cache, limit=1)
    if not gap:
        return None
    sep = gap[0]
    assert answers_query(t, a, sep.query, cache) != answers_query(h, a, sep.query, cache)
    return sep
