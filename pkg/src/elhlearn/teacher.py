"""Simulated membership / inseparability / example oracles over a hidden target.

An ``OracleSession`` owns the hidden target, the fixed ABox and the query
language, answers queries through the reasoner, and keeps full accounting:
counts, summed input sizes, the largest counterexample handed out, and an
append-only transcript.  Sessions are not thread-safe; use one per learner.

The counterexample policy is pluggable because a learner must work no matter
which separating query the oracle picks:

* ``minimal`` returns the first query in the deterministic gap order,
* ``randomized`` draws from the gap with the session seed,
* ``adversarial-cq`` (rooted-CQ language only) inflates an instance-query
  counterexample into a large variable-duplicated rooted CQ.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from . import reasoner
from .syntax import (
    ABox,
    ConceptQuery,
    ConjunctiveQuery,
    ConfigurationError,
    ContractViolationError,
    Query,
    QueryAtom,
    RejectedQueryError,
    RoleAtom,
    ConceptAtom,
    Signature,
    TBox,
    UnsupportedQueryError,
    Var,
    example_size,
    concept_query_as_cq,
    signature_of_abox,
    signature_of_query,
    signature_of_tbox,
    size_of,
    tree_of_concept,
)

POLICY_MINIMAL = "minimal"
POLICY_RANDOMIZED = "randomized"
POLICY_ADVERSARIAL_CQ = "adversarial-cq"

FRAGMENT_ELH = "elh"
FRAGMENT_LHS = "elh-lhs"
FRAGMENT_RHS = "elh-rhs"


@dataclass(frozen=True)
class Framework:
    """Learning setup: fragment, fixed ABox, query language, shared signature.

    With ``update_closure`` the inseparability oracle also ranges over ABoxes
    reachable from the fixed one by single linear-derivation replacements.
    """

    fixed_abox: ABox
    query_lang: str
    signature: Signature
    fragment: str = FRAGMENT_ELH
    update_closure: bool = False
    closure_cap: int = 200

    def __post_init__(self) -> None:
        if self.query_lang not in (
            reasoner.LANG_AQ,
            reasoner.LANG_IQ,
            reasoner.LANG_CQR,
            "cq",
        ):
            raise ConfigurationError(f"unknown query language {self.query_lang!r}")


def framework_for(target: TBox, fixed_abox: ABox, query_lang: str, **kw) -> Framework:
    sig = signature_of_tbox(target).union(signature_of_abox(fixed_abox))
    return Framework(fixed_abox, query_lang, sig, **kw)


def query_in_language(q: Query, lang: str) -> bool:
    """Does the query belong to the framework's language?

    Atomic assertions are also instance queries; the unrestricted language
    admits every supported shape.
    """
    from .syntax import AtomicQuery, RoleQuery, is_rooted

    if isinstance(q, AtomicQuery):
        return True
    if lang == reasoner.LANG_AQ:
        return False
    if isinstance(q, (ConceptQuery, RoleQuery)):
        return True
    if lang == reasoner.LANG_IQ:
        return False
    if isinstance(q, ConjunctiveQuery):
        from .syntax import is_existential_atom_query

        return is_rooted(q) or (lang == "cq" and is_existential_atom_query(q))
    return False


def check_fragment(t: TBox, fragment: str) -> None:
    from .syntax import Atom, Top

    for ci in t.cis:
        if fragment == FRAGMENT_LHS and not isinstance(ci.rhs, (Atom, Top)):
            raise ConfigurationError("fragment allows complex concepts on the left only")
        if fragment == FRAGMENT_RHS and not isinstance(ci.lhs, (Atom, Top)):
            raise ConfigurationError("fragment allows complex concepts on the right only")


@dataclass
class TranscriptEntry:
    kind: str
    input_size: int
    answer: str
    mq_total: int
    eq_total: int
    input_size_total: int

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "inputSize": self.input_size,
            "answer": self.answer,
            "runningTotals": {
                "mq": self.mq_total,
                "eq": self.eq_total,
                "inputSize": self.input_size_total,
            },
        }


class OracleSession:
    """Query interface to a hidden target; the target never leaks."""

    def __init__(
        self,
        target: TBox,
        framework: Framework,
        policy: str = POLICY_MINIMAL,
        seed: int = 0,
        max_total_input: int | None = None,
    ):
        check_fragment(target, framework.fragment)
        if policy not in (POLICY_MINIMAL, POLICY_RANDOMIZED, POLICY_ADVERSARIAL_CQ):
            raise ConfigurationError(f"unknown policy {policy!r}")
        if policy == POLICY_ADVERSARIAL_CQ and framework.query_lang != reasoner.LANG_CQR:
            raise ConfigurationError("adversarial-cq policy needs the rooted-CQ language")
        self._target = target
        self.framework = framework
        self.policy = policy
        self.rng = random.Random(seed)
        self.max_total_input = max_total_input
        self.mq_count = 0
        self.eq_count = 0
        self.ex_count = 0
        self.mq_input_size_sum = 0
        self.eq_input_size_sum = 0
        self.largest_counterexample = 0
        self.transcript: list[TranscriptEntry] = []
        self._cache = reasoner.ModelCache()

    # -- accounting -------------------------------------------------------

    def _log(self, kind: str, input_size: int, answer: str) -> None:
        self.transcript.append(
            TranscriptEntry(
                kind,
                input_size,
                answer,
                self.mq_count,
                self.eq_count,
                self.mq_input_size_sum + self.eq_input_size_sum,
            )
        )
        if (
            self.max_total_input is not None
            and self.mq_input_size_sum + self.eq_input_size_sum > self.max_total_input
        ):
            from .syntax import BudgetExceededError

            raise BudgetExceededError(
                f"oracle input budget {self.max_total_input} exceeded"
            )

    def export_transcript(self) -> str:
        return "\n".join(json.dumps(e.as_dict(), sort_keys=True) for e in self.transcript)

    # -- membership -------------------------------------------------------

    def membership(self, a: ABox, q: Query) -> bool:
        allowed = self.framework.signature.union(signature_of_abox(a))
        if not allowed.covers(signature_of_query(q)):
            raise RejectedQueryError("query uses names outside the framework signature")
        answer = reasoner.answers_query(self._target, a, q, self._cache)
        self.mq_count += 1
        self.mq_input_size_sum += example_size(a, q)
        self._log("MQ", example_size(a, q), "yes" if answer else "no")
        return answer

    # -- inseparability ---------------------------------------------------

    def _counterexample_aboxes(self):
        yield self.framework.fixed_abox
        if self.framework.update_closure:
            from .updates import enumerate_closure

            for a in enumerate_closure(
                self._target, self.framework.fixed_abox, cap=self.framework.closure_cap
            ):
                yield a

    def inseparability(self, hypothesis: TBox) -> tuple[ABox, Query] | None:
        """None for inseparable, else a verified counterexample ``(abox, q)``."""
        if not self.framework.signature.covers(signature_of_tbox(hypothesis)):
            raise RejectedQueryError("hypothesis uses names outside the signature")
        if self.framework.query_lang == "cq":
            raise UnsupportedQueryError(
                "inseparability is only decided for aq, iq and rooted-cq"
            )
        self.eq_count += 1
        self.eq_input_size_sum += size_of(hypothesis)
        for a in self._counterexample_aboxes():
            gap = reasoner.inseparability_gap(
                self._target, hypothesis, a, self.framework.query_lang, cache=self._cache
            )
            if gap:
                query = self._pick(gap, a, hypothesis)
                self.largest_counterexample = max(
                    self.largest_counterexample, example_size(a, query)
                )
                self._log("EQ", size_of(hypothesis), "counterexample")
                return a, query
        self._log("EQ", size_of(hypothesis), "yes")
        return None

    def _pick(self, gap: list[reasoner.Separation], a: ABox, hypothesis: TBox) -> Query:
        if self.policy == POLICY_RANDOMIZED:
            sep = self.rng.choice(gap)
        else:
            sep = gap[0]
        query = sep.query
        if self.framework.query_lang == reasoner.LANG_CQR:
            if isinstance(query, ConceptQuery):
                if self.policy == POLICY_ADVERSARIAL_CQ:
                    query = duplicate_variables(query)
                else:
                    query = concept_query_as_cq(query)
        tv = reasoner.answers_query(self._target, a, query, self._cache)
        hv = reasoner.answers_query(hypothesis, a, query, self._cache)
        if tv == hv:
            raise ContractViolationError("internal: unverified counterexample")
        return query

    # -- sampling ---------------------------------------------------------

    def example(self, dist) -> tuple[tuple[ABox, Query], int]:
        """Draw a classified example from a distribution over the fixed ABox."""
        fixed = self.framework.fixed_abox
        for a, q in dist.support:
            if reasoner.abox_key(a) != reasoner.abox_key(fixed):
                raise ConfigurationError("distribution support must use the fixed ABox")
            if not query_in_language(q, self.framework.query_lang):
                raise ConfigurationError(
                    f"support example outside the {self.framework.query_lang} language: {q!r}"
                )
        a, q = dist.sample(self.rng)
        label = 1 if reasoner.answers_query(self._target, a, q, self._cache) else 0
        self.ex_count += 1
        self._log("EX", example_size(a, q), str(label))
        return (a, q), label


def duplicate_variables(q: ConceptQuery) -> ConjunctiveQuery:
    """Inflate a tree-shaped instance query into a merged rooted CQ.

    A node at depth d is copied d+1 times and copy j of a parent points at
    copies j and j+1 of each child, so the result collapses back onto the
    original chain and stays equivalent to it.
    """
    tree = tree_of_concept(q.concept)
    depth: dict[int, int] = {tree.root: 0}
    order = [tree.root]
    i = 0
    while i < len(order):
        node = order[i]
        i += 1
        for child, _ in tree.children(node):
            depth[child] = depth[node] + 1
            order.append(child)

    copies: dict[int, list] = {tree.root: [q.ind]}
    variables: list[Var] = []
    counter = [0]

    def var() -> Var:
        counter[0] += 1
        v = Var(f"x{counter[0]}")
        variables.append(v)
        return v

    atoms: set[QueryAtom] = set()
    for node in order:
        if node != tree.root:
            copies[node] = [var() for _ in range(depth[node] + 1)]
        for a in tree.labels[node]:
            for c in copies[node]:
                atoms.add(ConceptAtom(a, c))
    for parent, child, role in tree.edges:
        for j, pc in enumerate(copies[parent]):
            atoms.add(RoleAtom(role, pc, copies[child][j]))
            atoms.add(RoleAtom(role, pc, copies[child][j + 1]))
    return ConjunctiveQuery((q.ind,), frozenset(variables), frozenset(atoms))
