"""Query selection policies.

Four strategies for picking which plan to ask about next:

    random    uniform draw over the not-yet-queried plans
    mph       a plan from the most probable hypothesis that still has one
    mpp       the plan with the highest cumulative probability over the
              hypotheses it can be refined into
    entropy   the plan minimizing the expected entropy of the pruned set

All selectors are pure functions of (hypothesis set, closed keys, seed):
ties are broken by a PRNG derived from the seed and the number of closed
plans, so repeated runs make identical choices.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import PolicyError
from .plans import Plan, PlanNode, canonical_key, is_refinement
from .recognizer import HypothesisSet
from .engine import candidate_plans, survivors_if_false, survivors_if_true

POLICY_KINDS = ("random", "mph", "mpp", "entropy")

__all__ = [
    "POLICY_KINDS",
    "Policy",
    "candidate_plans",
    "cumulative_plan_prob",
    "entropy",
    "select_mph",
    "select_min_entropy",
    "select_mpp",
    "select_random",
]


def _rng(seed: int, closed: set[PlanNode]) -> random.Random:
    return random.Random(f"{seed}:{len(closed)}")


def cumulative_plan_prob(hset: HypothesisSet, plan: Plan) -> float:
    """Total weight of the hypotheses containing some plan refinable from
    `plan`."""
    return sum(
        h.weight
        for h in hset.hypotheses
        if any(is_refinement(plan, p) for p in h.plans)
    )


def _entropy_of_weights(weights: list[float]) -> float:
    if len(weights) <= 1:
        return 0.0
    total = sum(weights)
    e = 0.0
    for w in weights:
        p = w / total
        if p > 0:
            e -= p * math.log2(p)
    return e


def entropy(hset: HypothesisSet) -> float:
    """Shannon entropy (bits) of the hypothesis distribution; empty and
    singleton sets score 0."""
    return _entropy_of_weights([h.weight for h in hset.hypotheses])


def select_random(hset: HypothesisSet, closed: set[PlanNode], seed: int) -> Plan:
    candidates = candidate_plans(hset, closed)
    if not candidates:
        raise PolicyError("no candidate plans left to query")
    return _rng(seed, closed).choice(candidates)


def select_mph(hset: HypothesisSet, closed: set[PlanNode], seed: int) -> Plan:
    """Pick an unqueried plan from the heaviest hypothesis; when that one is
    exhausted, walk down the weight ranking."""
    open_by_hyp: list[tuple[float, list[Plan]]] = []
    for h in hset.hypotheses:
        seen: set[PlanNode] = set()
        pending: list[Plan] = []
        for p in h.plans:
            key = canonical_key(p)
            if key not in closed and key not in seen:
                seen.add(key)
                pending.append(p)
        if pending:
            open_by_hyp.append((h.weight, pending))
    if not open_by_hyp:
        raise PolicyError("no candidate plans left to query")
    best = max(w for w, _ in open_by_hyp)
    tied = [pending for w, pending in open_by_hyp if w == best]
    rng = _rng(seed, closed)
    return rng.choice(rng.choice(tied))


def select_mpp(hset: HypothesisSet, closed: set[PlanNode], seed: int) -> Plan:
    candidates = candidate_plans(hset, closed)
    if not candidates:
        raise PolicyError("no candidate plans left to query")
    scored = [(cumulative_plan_prob(hset, t), t) for t in candidates]
    best = max(score for score, _ in scored)
    tied = [t for score, t in scored if score == best]
    return _rng(seed, closed).choice(tied)


def select_min_entropy(hset: HypothesisSet, closed: set[PlanNode], seed: int) -> Plan:
    """Pick the plan whose expected post-update entropy is smallest, where
    the two hypothetical updates use exactly the engine's pruning rules and
    survivor weights are renormalized before measuring."""
    candidates = candidate_plans(hset, closed)
    if not candidates:
        raise PolicyError("no candidate plans left to query")
    scored: list[tuple[float, Plan]] = []
    for t in candidates:
        p_true = cumulative_plan_prob(hset, t)
        ent_true = _entropy_of_weights([h.weight for h in survivors_if_true(hset, t)])
        ent_false = _entropy_of_weights([h.weight for h in survivors_if_false(hset, t)])
        scored.append((p_true * ent_true + (1.0 - p_true) * ent_false, t))
    best = min(score for score, _ in scored)
    tied = [t for score, t in scored if score == best]
    return _rng(seed, closed).choice(tied)


_SELECTORS = {
    "random": select_random,
    "mph": select_mph,
    "mpp": select_mpp,
    "entropy": select_min_entropy,
}


@dataclass(frozen=True)
class Policy:
    """A named selection strategy with the tie-break seed fixed per run."""

    kind: str
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _SELECTORS:
            raise PolicyError(f"unknown policy kind {self.kind!r} (expected one of {POLICY_KINDS})")

    def select(self, hset: HypothesisSet, closed: set[PlanNode]) -> Plan:
        return _SELECTORS[self.kind](hset, closed, self.seed)
