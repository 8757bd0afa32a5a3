"""Synthetic benchmark instances and hand-built demonstration fixtures.

gen_instance draws a random acyclic library arranged in strata (goals on
top, intermediate complex actions below, basic actions at the bottom), picks
the agent's true goals, completes one plan per goal, and emits a prefix of a
legal execution order as the observation sequence.

builtin_chemistry encodes a small lab domain where a student either mixes
all substance pairs or mixes everything in one flask; builtin_quartet is a
four-hypothesis fixture exercising every corner of the refinement, match,
and pruning rules.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import GenerationError
from .library import PlanLibrary, RefinementMethod
from .plans import (
    Hypothesis,
    Plan,
    PlanNode,
    describes,
    is_complete,
    observe_leaf,
    validate_hypothesis,
)
from .recognizer import HypothesisSet, enabled_expansion_targets

# Stratum mixing knobs, calibrated so hypothesis counts for 3..7 observations
# stay in the tens on default parameters. Libraries where a single basic
# action starts too many distinct derivations are resampled: such hubs make
# the hypothesis space blow up multiplicatively on every matching
# observation, far outside the regime the benchmark targets.
_BASIC_SHARE_GOAL = 0.55
_BASIC_SHARE_MID = 0.75
_TAU_CHOICES = (2, 3)
_TAU_WEIGHTS = (60, 40)
_METHOD_COUNT_WEIGHTS = (65, 25, 10)  # weights for 1..branching methods
_MID_PER_LEVEL = 5
_MAX_CHAINS_PER_LABEL = 3     # chains from one complex action to one basic
_MAX_CHAINS_PER_GOAL_SUM = 6  # chains from all goals to one basic
_MAX_LIBRARY_TRIES = 60
_MAX_TRUTH_TRIES = 40


@dataclass(frozen=True)
class GenParams:
    """Generator configuration. order_density is the chance each adjacent
    constituent pair of a method gets an ordering constraint."""

    num_goals: int = 5
    branching: int = 3
    depth: int = 3
    num_basic: int = 22
    obs_len: int = 5
    seed: int = 0
    order_density: float = 0.5

    def __post_init__(self):
        for name in ("num_goals", "branching", "depth", "num_basic", "obs_len"):
            if getattr(self, name) < 1:
                raise GenerationError(f"{name} must be >= 1")
        if not 0.0 <= self.order_density <= 1.0:
            raise GenerationError("order_density must be in [0, 1]")


@dataclass(frozen=True)
class Instance:
    """One benchmark unit: a library, the agent's true hypothesis (complete
    plans, observation marks on the emitted prefix), and the observations."""

    library: PlanLibrary
    truth: Hypothesis
    observations: tuple[str, ...]

    def __post_init__(self):
        validate_hypothesis(self.library, self.truth)
        for plan in self.truth.plans:
            if not is_complete(plan, self.library):
                raise GenerationError(f"truth plan rooted at {plan.root.label!r} is incomplete")
        if not describes(self.truth, self.observations):
            raise GenerationError("truth does not describe the observation sequence")


def _gen_library(params: GenParams, rng: random.Random) -> PlanLibrary:
    basics = [f"b{i}" for i in range(params.num_basic)]
    levels: list[list[str]] = [basics]
    for level in range(1, params.depth):
        levels.append([f"c{level}_{i}" for i in range(_MID_PER_LEVEL)])
    goals = [f"g{i}" for i in range(params.num_goals)]
    levels.append(goals)

    complex_actions = [a for level in levels[1:] for a in level]
    methods: list[RefinementMethod] = []
    for level_idx in range(1, len(levels)):
        basic_share = _BASIC_SHARE_GOAL if level_idx == len(levels) - 1 else _BASIC_SHARE_MID
        for head in levels[level_idx]:
            count_weights = _METHOD_COUNT_WEIGHTS[: params.branching]
            n_methods = rng.choices(range(1, len(count_weights) + 1), weights=count_weights)[0]
            for m_idx in range(n_methods):
                tau_len = rng.choices(_TAU_CHOICES, weights=_TAU_WEIGHTS)[0]
                # distinct labels within a method: duplicated constituents
                # let one observation attach several ways in a single plan,
                # which compounds into runaway hypothesis counts
                n_basic_slots = sum(
                    1 for _ in range(tau_len)
                    if level_idx == 1 or rng.random() < basic_share
                )
                slots = rng.sample(basics, min(n_basic_slots, len(basics)))
                lower_pool = [a for level in levels[1:level_idx] for a in level]
                n_complex_slots = tau_len - len(slots)
                slots += rng.sample(lower_pool, min(n_complex_slots, len(lower_pool)))
                if not slots:
                    slots = [rng.choice(basics)]
                rng.shuffle(slots)
                constituents = slots
                order = frozenset(
                    (i, i + 1) for i in range(len(constituents) - 1)
                    if rng.random() < params.order_density
                )
                methods.append(
                    RefinementMethod(
                        id=f"m_{head}_{m_idx}",
                        head=head,
                        constituents=tuple(constituents),
                        order=order,
                    )
                )

    return PlanLibrary(
        basic=frozenset(basics),
        complex_actions=frozenset(complex_actions),
        methods=tuple(methods),
        goals=tuple(goals),
    )


def _bounded_ambiguity(lib: PlanLibrary) -> bool:
    from .recognizer import _chains_to

    for o in sorted(lib.basic):
        goal_total = 0
        for c in sorted(lib.complex_actions):
            n = len(_chains_to(lib, c, o))
            if n > _MAX_CHAINS_PER_LABEL:
                return False
            if c in lib.goals:
                goal_total += n
        if goal_total > _MAX_CHAINS_PER_GOAL_SUM:
            return False
    return True


def _complete_plan(lib: PlanLibrary, label: str, rng: random.Random) -> PlanNode:
    if lib.is_basic(label):
        return PlanNode(label)
    method = rng.choice(lib.methods_for(label))
    children = tuple(_complete_plan(lib, c, rng) for c in method.constituents)
    return PlanNode(label, method=method.id, children=children)


def _count_leaves(node: PlanNode) -> int:
    if not node.children:
        return 1
    return sum(_count_leaves(c) for c in node.children)


def _emit_observations(
    lib: PlanLibrary, plans: list[Plan], obs_len: int, rng: random.Random
) -> tuple[list[Plan], list[str]]:
    """Mark a legal execution prefix of length obs_len. The first picks touch
    every plan once so no true plan stays unobserved."""
    observations: list[str] = []
    start_order = list(range(len(plans)))
    rng.shuffle(start_order)
    for step in range(obs_len):
        if step < len(plans):
            pool = [(start_order[step], path) for path in enabled_expansion_targets(lib, plans[start_order[step]])]
        else:
            pool = [
                (i, path)
                for i, plan in enumerate(plans)
                for path in enabled_expansion_targets(lib, plan)
            ]
        if not pool:
            raise GenerationError("execution stalled before reaching obs_len")
        plan_idx, path = rng.choice(pool)
        leaf = plans[plan_idx].node_at(path)
        observations.append(leaf.label)
        plans[plan_idx] = observe_leaf(plans[plan_idx], path, step)
    return plans, observations


def gen_instance(params: GenParams) -> Instance:
    """Deterministic in params.seed. Raises GenerationError when the
    parameters cannot yield a valid instance."""
    for lib_try in range(_MAX_LIBRARY_TRIES):
        rng = random.Random(f"{params.seed}:{lib_try}")
        lib = _gen_library(params, rng)
        if not _bounded_ambiguity(lib):
            continue
        for _ in range(_MAX_TRUTH_TRIES):
            want = 2 if (params.num_goals >= 2 and params.obs_len >= 2 and rng.random() < 0.35) else 1
            goal_names = rng.sample(list(lib.goals), want)
            plans = [Plan(_complete_plan(lib, g, rng)) for g in goal_names]
            if sum(_count_leaves(p.root) for p in plans) < params.obs_len:
                continue
            marked, observations = _emit_observations(lib, plans, params.obs_len, rng)
            truth = Hypothesis(tuple(marked), 1.0)
            return Instance(lib, truth, tuple(observations))
    raise GenerationError(
        f"could not generate an instance with obs_len={params.obs_len} "
        f"(plans too small for these parameters)"
    )


def _chem_library() -> PlanLibrary:
    pair_mixes = ("mix_AB", "mix_AC", "mix_AD", "mix_BC", "mix_BD", "mix_CD")
    return PlanLibrary(
        basic=frozenset(pair_mixes + ("mix_ABCD",)),
        complex_actions=frozenset({"InvestigateReaction", "Pairwise", "FourWay"}),
        methods=(
            RefinementMethod("strategy_pairwise", "InvestigateReaction", ("Pairwise",)),
            RefinementMethod("strategy_fourway", "InvestigateReaction", ("FourWay",)),
            RefinementMethod("run_pairwise", "Pairwise", pair_mixes),
            RefinementMethod("run_fourway", "FourWay", ("mix_AB", "mix_ABCD")),
        ),
        goals=("InvestigateReaction",),
    )


def builtin_chemistry() -> dict[str, Instance]:
    """Lab-strategy instances: a student determines which of four substances
    react, either by mixing each pair or by mixing everything in one flask
    (where the first pour pair still shows up as a pair mix)."""
    lib = _chem_library()
    pairwise = Plan(
        PlanNode(
            "InvestigateReaction",
            method="strategy_pairwise",
            children=(
                PlanNode(
                    "Pairwise",
                    method="run_pairwise",
                    children=tuple(PlanNode(m) for m in lib.method("run_pairwise").constituents),
                ),
            ),
        )
    )
    fourway = Plan(
        PlanNode(
            "InvestigateReaction",
            method="strategy_fourway",
            children=(
                PlanNode(
                    "FourWay",
                    method="run_fourway",
                    children=(PlanNode("mix_AB"), PlanNode("mix_ABCD")),
                ),
            ),
        )
    )
    return {
        "pairwise_first_mix": Instance(
            lib,
            Hypothesis((observe_leaf(pairwise, (0, 0), 0),)),
            ("mix_AB",),
        ),
        "pairwise_two_mixes": Instance(
            lib,
            Hypothesis((observe_leaf(observe_leaf(pairwise, (0, 0), 0), (0, 5), 1),)),
            ("mix_AB", "mix_CD"),
        ),
        "fourway_all_mix": Instance(
            lib,
            Hypothesis((observe_leaf(fourway, (0, 1), 0),)),
            ("mix_ABCD",),
        ),
    }


@dataclass(frozen=True)
class QuartetFixture:
    """Four two-plan hypotheses over three observations, one complete plan
    pair, and the ground truth, wired so every pruning behavior shows up:
    p2 is refinable to p1 and p3, which do not refine each other but share a
    common refinement (complete_main); h4 uses a different root method."""

    library: PlanLibrary
    observations: tuple[str, ...]
    hset: HypothesisSet
    h1: Hypothesis
    h2: Hypothesis
    h3: Hypothesis
    h4: Hypothesis
    p1: Plan
    p2: Plan
    p3: Plan
    p4: Plan
    partner1: Plan
    partner2: Plan
    partner3: Plan
    partner4: Plan
    complete_main: Plan
    complete_partner: Plan
    truth: Hypothesis = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "truth", Hypothesis((self.complete_main, self.complete_partner)))


def builtin_quartet() -> QuartetFixture:
    lib = PlanLibrary(
        basic=frozenset({"o1", "o2", "o3", "a", "b", "d", "e"}),
        complex_actions=frozenset({"G1", "G2", "X", "Y", "Z"}),
        methods=(
            RefinementMethod("mg", "G1", ("o1", "X", "Y"), frozenset({(0, 1), (0, 2)})),
            RefinementMethod("malt", "G1", ("o1", "Y", "X"), frozenset({(0, 1), (0, 2)})),
            RefinementMethod("mx", "X", ("o3", "a")),
            RefinementMethod("my", "Y", ("o3", "b")),
            RefinementMethod("mp", "G2", ("o2", "Z"), frozenset({(0, 1)})),
            RefinementMethod("mp2", "G2", ("o2", "o3", "e"), frozenset({(0, 1), (0, 2)})),
            RefinementMethod("mz", "Z", ("o3", "d")),
        ),
        goals=("G1", "G2"),
    )

    def g1(x_expanded: bool, y_expanded: bool, alt: bool = False) -> Plan:
        x = PlanNode("X", method="mx", children=(PlanNode("o3", observed=2), PlanNode("a"))) \
            if x_expanded else PlanNode("X")
        y_mark = 2 if y_expanded and not x_expanded else None
        y = PlanNode("Y", method="my", children=(PlanNode("o3", observed=y_mark), PlanNode("b"))) \
            if y_expanded else PlanNode("Y")
        if alt:
            return Plan(PlanNode("G1", method="malt", children=(PlanNode("o1", observed=0), y, x)))
        return Plan(PlanNode("G1", method="mg", children=(PlanNode("o1", observed=0), x, y)))

    def g2_open() -> Plan:
        return Plan(PlanNode("G2", method="mp", children=(PlanNode("o2", observed=1), PlanNode("Z"))))

    def g2_deep() -> Plan:
        z = PlanNode("Z", method="mz", children=(PlanNode("o3", observed=2), PlanNode("d")))
        return Plan(PlanNode("G2", method="mp", children=(PlanNode("o2", observed=1), z)))

    p1 = g1(x_expanded=True, y_expanded=False)
    p2 = g1(x_expanded=False, y_expanded=False)
    p3 = g1(x_expanded=False, y_expanded=True)
    p4 = g1(x_expanded=False, y_expanded=False, alt=True)
    partner1 = g2_open()
    partner2 = Plan(
        PlanNode(
            "G2",
            method="mp2",
            children=(PlanNode("o2", observed=1), PlanNode("o3", observed=2), PlanNode("e")),
        )
    )
    partner3 = g2_open()
    partner4 = g2_deep()

    complete_main = Plan(
        PlanNode(
            "G1",
            method="mg",
            children=(
                PlanNode("o1", observed=0),
                PlanNode("X", method="mx", children=(PlanNode("o3", observed=2), PlanNode("a"))),
                PlanNode("Y", method="my", children=(PlanNode("o3"), PlanNode("b"))),
            ),
        )
    )
    complete_partner = Plan(
        PlanNode(
            "G2",
            method="mp",
            children=(
                PlanNode("o2", observed=1),
                PlanNode("Z", method="mz", children=(PlanNode("o3"), PlanNode("d"))),
            ),
        )
    )

    h1 = Hypothesis((p1, partner1), 0.25)
    h2 = Hypothesis((p2, partner2), 0.25)
    h3 = Hypothesis((p3, partner3), 0.25)
    h4 = Hypothesis((p4, partner4), 0.25)
    hset = HypothesisSet((h1, h2, h3, h4), observation_count=3)

    fixture = QuartetFixture(
        library=lib,
        observations=("o1", "o2", "o3"),
        hset=hset,
        h1=h1, h2=h2, h3=h3, h4=h4,
        p1=p1, p2=p2, p3=p3, p4=p4,
        partner1=partner1, partner2=partner2, partner3=partner3, partner4=partner4,
        complete_main=complete_main,
        complete_partner=complete_partner,
    )
    for h in (h1, h2, h3, h4):
        validate_hypothesis(lib, h)
    return fixture
