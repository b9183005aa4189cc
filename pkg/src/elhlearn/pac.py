"""Probably-approximately-correct layer over the exact learners.

``pac_from_exact`` replaces the i-th inseparability question by
``ceil((1/eps) * (ln(1/delta) + i*ln 2))`` classified draws from the example
oracle; any draw the hypothesis misclassifies doubles as a counterexample.
``true_error`` integrates the disagreement set against a finite-support
distribution.

The module also ships a family of targets that separates the two models: a
hidden word w over {r, s} of length n defines a target whose one informative
query is the w-shaped chain ending in a marker name, next to a decoy tree
that makes every other query useless.  A sample-consistent hypothesis is
computable in polynomial time, while exact identification of w against an
adversarial oracle needs one query per still-possible word.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from . import reasoner, teacher
from .syntax import (
    ABox,
    Atom,
    BudgetExceededError,
    CI,
    Concept,
    ConceptAtom,
    ConceptQuery,
    ConfigurationError,
    ConjunctiveQuery,
    DataError,
    Exists,
    Query,
    TBox,
    TOP,
    Var,
    abox,
    conj,
    normalize,
    terminology,
)


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    """Finite-support distribution over fixed-ABox examples."""

    support: tuple[tuple[ABox, Query], ...]
    weights: tuple[float, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.support:
            raise ConfigurationError("distribution needs a non-empty support")
        if len(self.support) != len(self.weights):
            raise ConfigurationError("support and weights must align")
        if any(w < 0 for w in self.weights):
            raise ConfigurationError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ConfigurationError("weights must sum to one")

    def sample(self, rng: random.Random) -> tuple[ABox, Query]:
        return rng.choices(self.support, weights=self.weights, k=1)[0]

    def rng(self) -> random.Random:
        return random.Random(self.seed)


def uniform_distribution(examples, seed: int = 0) -> Distribution:
    examples = tuple(examples)
    n = len(examples)
    if n == 0:
        raise ConfigurationError("distribution needs a non-empty support")
    return Distribution(examples, tuple(1.0 / n for _ in range(n)), seed)


def sample_count(eps: float, delta: float, i: int) -> int:
    """Draws replacing the i-th inseparability question (at least one)."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ConfigurationError("eps and delta must lie in (0, 1)")
    return max(1, math.ceil((1.0 / eps) * (math.log(1.0 / delta) + i * math.log(2.0))))


def true_error(h: TBox, t: TBox, a0: ABox, dist: Distribution) -> float:
    """Probability mass of the examples the two TBoxes classify differently."""
    cache = reasoner.ModelCache()
    total = 0.0
    for (a, q), w in zip(dist.support, dist.weights):
        if reasoner.answers_query(h, a, q, cache) != reasoner.answers_query(t, a, q, cache):
            total += w
    return total


@dataclass
class PacOutcome:
    hypothesis: TBox
    schedule: list[int]
    samples_used: int
    eq_rounds: int


class SampledEqOracle:
    """Session wrapper: inseparability questions become sampling rounds."""

    def __init__(self, session: teacher.OracleSession, eps: float, delta: float, dist: Distribution):
        self.session = session
        self.eps = eps
        self.delta = delta
        self.dist = dist
        self.round = 0
        self.schedule: list[int] = []
        self.samples_used = 0
        self._cache = reasoner.ModelCache()

    @property
    def framework(self):
        return self.session.framework

    @property
    def mq_count(self):
        return self.session.mq_count

    @property
    def eq_count(self):
        return self.session.eq_count

    @property
    def mq_input_size_sum(self):
        return self.session.mq_input_size_sum

    @property
    def eq_input_size_sum(self):
        return self.session.eq_input_size_sum

    @property
    def largest_counterexample(self):
        return self.session.largest_counterexample

    def membership(self, a: ABox, q: Query) -> bool:
        return self.session.membership(a, q)

    def inseparability(self, hypothesis: TBox):
        self.round += 1
        m = sample_count(self.eps, self.delta, self.round)
        self.schedule.append(m)
        for _ in range(m):
            (a, q), label = self.session.example(self.dist)
            self.samples_used += 1
            predicted = reasoner.answers_query(hypothesis, a, q, self._cache)
            if predicted != bool(label):
                return a, q
        return None


def pac_from_exact(
    session: teacher.OracleSession,
    learner,
    eps: float,
    delta: float,
    dist: Distribution,
) -> PacOutcome:
    """Run an exact learner with sampled inseparability answers."""
    wrapped = SampledEqOracle(session, eps, delta, dist)
    result = learner(wrapped)
    return PacOutcome(result.hypothesis, wrapped.schedule, wrapped.samples_used, wrapped.round)


# ---------------------------------------------------------------------------
# The separating family: hidden chains next to a decoy tree
# ---------------------------------------------------------------------------

MARKER = "M"
SEED_NAME = "A"
LEVEL_PREFIX = "X"
CHAIN_ROLES = ("r", "s")


def chain_concept(word: str, tail: Concept) -> Concept:
    out = tail
    for ch in reversed(word):
        if ch not in CHAIN_ROLES:
            raise ConfigurationError(f"chain letters must be in {CHAIN_ROLES}")
        out = Exists(ch, out)
    return out


@dataclass(frozen=True)
class HiddenChainFixture:
    """Targets ``{A [= some w. M} + base`` for a hidden word w of length n."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigurationError("chain length must be at least 1")

    def words(self) -> list[str]:
        out = [""]
        for _ in range(self.n):
            out = [w + c for w in out for c in CHAIN_ROLES]
        return out

    def base_tbox(self) -> TBox:
        cis = [
            CI(Atom(SEED_NAME), Atom(f"{LEVEL_PREFIX}0")),
            CI(
                Atom(MARKER),
                conj(Exists("r", Atom(MARKER)), Exists("s", Atom(MARKER))),
            ),
        ]
        for i in range(self.n):
            nxt = Atom(f"{LEVEL_PREFIX}{i + 1}")
            cis.append(CI(Atom(f"{LEVEL_PREFIX}{i}"), conj(Exists("r", nxt), Exists("s", nxt))))
        return terminology(cis)

    def target(self, word: str) -> TBox:
        if len(word) != self.n:
            raise ConfigurationError("hidden word must have length n")
        base = self.base_tbox()
        return terminology(
            set(base.cis) | {CI(Atom(SEED_NAME), chain_concept(word, Atom(MARKER)))},
            base.ris,
        )

    def fixed_abox(self) -> ABox:
        return abox(concepts=[(SEED_NAME, "a")])

    def marker_query(self) -> ConjunctiveQuery:
        return ConjunctiveQuery(
            (), frozenset({Var("x")}), frozenset({ConceptAtom(MARKER, Var("x"))})
        )

    def word_query(self, word: str) -> ConceptQuery:
        return ConceptQuery(chain_concept(word, Atom(MARKER)), "a")

    def canonical_support(self, extra_words: int = 0, seed: int = 0):
        """The marker query plus every word query (or a seeded subset)."""
        words = self.words()
        if extra_words and extra_words < len(words):
            rng = random.Random(seed)
            words = sorted(rng.sample(words, extra_words))
        examples = [(self.fixed_abox(), self.marker_query())]
        examples += [(self.fixed_abox(), self.word_query(w)) for w in words]
        return examples


def classify_fixture_example(n: int, word: str, q: Query) -> bool:
    """Label of a support example under the target for ``word`` (no reasoner)."""
    if isinstance(q, ConjunctiveQuery):
        return True  # the marker is always reachable through the hidden chain
    if isinstance(q, ConceptQuery):
        w = _word_of_chain(q.concept)
        if w is not None:
            return len(w) >= n and w[:n] == word
    raise ConfigurationError("not a fixture example")


def _word_of_chain(c: Concept) -> str | None:
    out = []
    while isinstance(c, Exists) and c.role in CHAIN_ROLES:
        out.append(c.role)
        c = c.filler
    if isinstance(c, Atom) and c.name == MARKER:
        return "".join(out)
    return None


def fixture_pac_learner(sample, n: int) -> tuple[TBox, int]:
    """Hypothesis consistent with a classified fixture sample, plus step count.

    A positive chain example pins the hidden word.  A positive marker example
    alone still rules out the bare base (which cannot reach the marker), so
    the learner then commits to the first word no sampled negative excludes;
    a genuine sample never excludes the true word.  Steps count elementary
    operations so growth in n is measurable without timing noise.
    """
    fixture = HiddenChainFixture(n)
    h = fixture.base_tbox()
    steps = len(h.cis)
    word: str | None = None
    marker_positive = False
    excluded: set[str] = set()
    for (a, q), label in sample:
        steps += 1
        if isinstance(q, ConjunctiveQuery) and label:
            marker_positive = True
            continue
        if isinstance(q, ConceptQuery):
            w = _word_of_chain(q.concept)
            if w is None or len(w) < n:
                continue
            if label:
                if word is not None and word != w[:n]:
                    raise DataError("two distinct positive chain words")
                word = w[:n]
            else:
                excluded.add(w[:n])
    if word is None and marker_positive:
        for w in fixture.words():
            steps += 1
            if w not in excluded:
                word = w
                break
        if word is None:
            raise DataError("every chain word is excluded by a negative example")
    if word is not None:
        h = fixture.target(word)
        steps += n
    cache = reasoner.ModelCache()
    for (a, q), label in sample:
        steps += 1
        if reasoner.answers_query(h, a, q, cache) != bool(label):
            raise DataError("no consistent hypothesis for this sample")
    return h, steps


@dataclass
class AdversarialOutcome:
    word: str
    queries: int


def identify_word_adversarially(n: int, probe_order: list[str] | None = None) -> AdversarialOutcome:
    """Exact identification against the least-informative oracle.

    The oracle keeps the set of words consistent with its answers and denies
    every probe while more than one candidate remains, so any probing order
    spends one query per eliminated word.
    """
    fixture = HiddenChainFixture(n)
    candidates = fixture.words()
    order = probe_order if probe_order is not None else list(candidates)
    queries = 0
    remaining = list(candidates)
    for w in order:
        if len(remaining) == 1:
            break
        queries += 1
        if w in remaining:
            remaining.remove(w)  # oracle answers "no" and stays consistent
    if len(remaining) != 1:
        raise BudgetExceededError("probe order did not identify the hidden word")
    return AdversarialOutcome(remaining[0], queries)


# ---------------------------------------------------------------------------
# Shattering
# ---------------------------------------------------------------------------


def shatters(hypotheses, examples, budget: int = 200_000) -> bool:
    """Do the hypotheses realize every classification of the examples?"""
    examples = list(examples)
    behaviors: set[tuple[bool, ...]] = set()
    cache = reasoner.ModelCache()
    spent = 0
    for h in hypotheses:
        row = []
        for a, q in examples:
            spent += 1
            if spent > budget:
                raise BudgetExceededError(
                    f"shattering check stopped after {budget} evaluations; "
                    f"saw {len(behaviors)} of {2 ** len(examples)} behaviours"
                )
            row.append(reasoner.answers_query(h, a, q, cache))
        behaviors.add(tuple(row))
        if len(behaviors) == 2 ** len(examples):
            return True
    return len(behaviors) == 2 ** len(examples)


def cyclic_abox(n: int) -> ABox:
    """Ring of r-edges with self s-loops everywhere except the last node."""
    if n < 2:
        raise ConfigurationError("the ring needs at least two individuals")
    roles = [("r", f"a{i}", f"a{i + 1}") for i in range(1, n)]
    roles += [("s", f"a{i}", f"a{i}") for i in range(1, n)]
    roles.append(("r", f"a{n}", "a1"))
    return abox(roles=roles)


def ring_identifying_concept(n: int, i: int) -> Concept:
    """Concept every ring individual except ``a_i`` satisfies."""
    c: Concept = Exists("s", TOP)
    for _ in range(n - i):
        c = Exists("r", c)
    return c


def ring_hypotheses(n: int) -> list[TBox]:
    """One hypothesis per subset of ring nodes, built to shatter them.

    The conjunction of all identifying concepts but the j-th is satisfied by
    exactly the j-th node, so a union of such inclusions marks any chosen
    subset with ``A`` (the empty subset gets the all-out conjunction).
    """
    concepts = [ring_identifying_concept(n, i) for i in range(1, n + 1)]
    exactly = [
        normalize(conj(*(c for i, c in enumerate(concepts) if i != j)))
        for j in range(n)
    ]
    out = []
    for mask in range(2 ** n):
        if mask == 0:
            cis = {CI(normalize(conj(*concepts)), Atom("A"))}
        else:
            cis = {CI(exactly[j], Atom("A")) for j in range(n) if mask & (1 << j)}
        out.append(terminology(cis))
    return out
