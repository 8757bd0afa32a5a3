"""Query-and-prune loop over a hypothesis set.

An oracle holding the agent's true hypothesis answers, for a queried plan,
whether some true plan can be refined from it. A True answer keeps exactly
the hypotheses with a plan that still shares a common refinement with the
query; a False answer removes exactly the hypotheses containing a plan the
query refines to. Both rules never drop a hypothesis that can be refined to
the truth, and repeated querying shrinks the set to precisely those
hypotheses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import OracleInconsistencyError, PolicyError
from .plans import (
    Hypothesis,
    Plan,
    PlanNode,
    canonical_key,
    hypothesis_refines,
    is_refinement,
    matches,
    plan_digest,
    plan_to_dict,
)
from .recognizer import HypothesisSet

if TYPE_CHECKING:
    from .policies import Policy


@dataclass(frozen=True)
class QueryOracle:
    """Answers refinement queries against a fixed ground-truth hypothesis."""

    truth: Hypothesis


def query_answer(oracle: QueryOracle, plan: Plan) -> bool:
    """True iff some plan of the oracle's truth is a refinement of `plan`."""
    return any(is_refinement(plan, t) for t in oracle.truth.plans)


def survivors_if_true(hset: HypothesisSet, plan: Plan) -> list[Hypothesis]:
    """Hypotheses with at least one plan matching the queried plan."""
    return [h for h in hset.hypotheses if any(matches(p, plan) for p in h.plans)]


def survivors_if_false(hset: HypothesisSet, plan: Plan) -> list[Hypothesis]:
    """Hypotheses with no plan refinable from the queried plan."""
    return [h for h in hset.hypotheses if not any(is_refinement(plan, p) for p in h.plans)]


def update(hset: HypothesisSet, plan: Plan, answer: bool) -> HypothesisSet:
    """Apply the pruning rule for the given answer and renormalize. An empty
    result means the oracle contradicted the set (truncated input or an
    untruthful oracle) and raises OracleInconsistencyError."""
    survivors = survivors_if_true(hset, plan) if answer else survivors_if_false(hset, plan)
    if not survivors:
        raise OracleInconsistencyError(
            f"update with answer={answer} removed every hypothesis"
        )
    return HypothesisSet.normalized(survivors, hset.observation_count, hset.truncated)


def candidate_plans(hset: HypothesisSet, closed: set[PlanNode]) -> list[Plan]:
    """Distinct not-yet-queried plans across the set, in first-occurrence
    order. Structural duplicates appearing in several hypotheses are listed
    once."""
    seen: set[PlanNode] = set()
    out: list[Plan] = []
    for h in hset.hypotheses:
        for p in h.plans:
            key = canonical_key(p)
            if key in closed or key in seen:
                continue
            seen.add(key)
            out.append(p)
    return out


@dataclass(frozen=True)
class TraceStep:
    plan: Plan
    answer: bool
    remaining: int

    def to_dict(self) -> dict:
        return {
            "plan_key": plan_digest(self.plan),
            "plan": plan_to_dict(self.plan),
            "answer": self.answer,
            "remaining": self.remaining,
        }


@dataclass
class ProbeTrace:
    """Per-query record of a run: what was asked, what the oracle said, and
    how many hypotheses remained."""

    initial_size: int
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def final_size(self) -> int:
        return self.steps[-1].remaining if self.steps else self.initial_size

    @property
    def query_count(self) -> int:
        return len(self.steps)

    def remaining_series(self) -> list[float]:
        """Fraction of the initial set remaining, starting at 1.0."""
        series = [1.0]
        for step in self.steps:
            series.append(step.remaining / self.initial_size)
        return series

    def to_dict(self) -> dict:
        return {
            "initial_size": self.initial_size,
            "final_size": self.final_size,
            "queries": self.query_count,
            "steps": [s.to_dict() for s in self.steps],
        }


def run_query_loop(
    h0: HypothesisSet,
    oracle: QueryOracle,
    policy: Policy,
    check_premise: bool = True,
) -> tuple[HypothesisSet, ProbeTrace]:
    """Iteratively query plans chosen by the policy and prune until one
    hypothesis remains or every plan still in the set has been queried.
    Performs at most as many queries as there are distinct plans in h0.

    Requires an untruncated set and, unless check_premise is disabled, that
    some hypothesis can be refined to the oracle's truth (the guarantee that
    pruning can never empty the set).
    """
    if h0.truncated:
        raise ValueError("query loop requires an untruncated hypothesis set")
    if check_premise and not any(hypothesis_refines(h, oracle.truth) for h in h0.hypotheses):
        raise OracleInconsistencyError("no hypothesis can be refined to the oracle's truth")

    trace = ProbeTrace(initial_size=len(h0))
    closed: set[PlanNode] = set()
    current = h0
    while len(current) > 1:
        candidates = candidate_plans(current, closed)
        if not candidates:
            break
        plan = policy.select(current, closed)
        key = canonical_key(plan)
        if key in closed:
            raise PolicyError(f"policy {policy.kind!r} returned an already-queried plan")
        if not any(canonical_key(c) == key for c in candidates):
            raise PolicyError(f"policy {policy.kind!r} returned a plan outside the hypothesis set")
        answer = query_answer(oracle, plan)
        current = update(current, plan, answer)
        closed.add(key)
        trace.steps.append(TraceStep(plan, answer, len(current)))
    return current, trace
