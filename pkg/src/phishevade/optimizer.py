"""Query-efficient black-box attack loop.

The optimizer spends its budget in two phases: every single-round
manipulation is tried once, cumulatively keeping strict improvements; then
the remaining budget is split into rounds, each of which evaluates every
injection manipulation as a candidate derived from the current best page
and keeps the best candidate iff it strictly improves the score. Only the
oracle's confidence score is observed; no gradients, no feature knowledge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import manipulations as M
from .detectors import Detector, OracleError
from .dom import HtmlPage
from .features import SET_A, census


class AttackConfigError(ValueError):
    """The budget cannot cover the configured manipulation sets."""


@dataclass
class AttackConfig:
    """Budget and manipulation schedule for one attack.

    The budget counts post-initialization oracle evaluations; the single
    initialization call is accounted separately in the trace. The number of
    injection rounds defaults to floor((budget - #SR) / #MR).
    """

    query_budget: int = 36
    sr_set: list[M.Manipulation] = field(default_factory=M.default_sr_set)
    mr_set: list[M.Manipulation] = field(default_factory=M.default_mr_set)
    rounds: int | None = None
    rng_seed: int = 0
    early_exit: bool = False

    def __post_init__(self):
        if not self.mr_set and self.rounds is None:
            raise AttackConfigError("mr_set is empty and rounds not given")
        if self.query_budget < len(self.sr_set) + len(self.mr_set):
            raise AttackConfigError(
                f"budget {self.query_budget} cannot cover {len(self.sr_set)} SR "
                f"manipulations plus one round of {len(self.mr_set)} MR manipulations"
            )

    @property
    def derived_rounds(self) -> int:
        if self.rounds is not None:
            return self.rounds
        return (self.query_budget - len(self.sr_set)) // len(self.mr_set)


@dataclass
class AttackStep:
    query_index: int  # 1-based; the initialization call is index 0
    manipulation: str
    score: float
    accepted: bool
    phase: str  # "SR" | "MR"
    round: int  # 0 during the SR phase

    def to_dict(self) -> dict:
        return {
            "query_index": self.query_index,
            "manipulation": self.manipulation,
            "score": self.score,
            "accepted": self.accepted,
            "phase": self.phase,
            "round": self.round,
        }


@dataclass
class AttackTrace:
    """Ordered record of every oracle query spent on one attack."""

    initial_score: float
    steps: list[AttackStep] = field(default_factory=list)
    confirmation_score: float | None = None
    best_score_history: list[float] = field(default_factory=list)

    @property
    def oracle_calls(self) -> int:
        return 1 + len(self.steps) + (0 if self.confirmation_score is None else 1)

    def phase_count(self, phase: str) -> int:
        return sum(1 for s in self.steps if s.phase == phase)

    def to_dict(self) -> dict:
        return {
            "initial_score": self.initial_score,
            "steps": [s.to_dict() for s in self.steps],
            "confirmation_score": self.confirmation_score,
            "best_score_history": self.best_score_history,
            "oracle_calls": self.oracle_calls,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class AttackResult:
    page: HtmlPage
    score: float
    evaded: bool
    trace: AttackTrace
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "evaded": self.evaded,
            "error": self.error,
            "trace": self.trace.to_dict(),
        }


def get_best_candidate(candidates):
    """Minimal-score (page, score) pair; ties keep the earliest candidate,
    i.e. the lowest index in the manipulation set that produced them."""
    if not candidates:
        raise ValueError("empty candidate set")
    best = candidates[0]
    for cand in candidates[1:]:
        if cand[1] < best[1]:
            best = cand
    return best


def attack(page: HtmlPage, detector: Detector, config: AttackConfig,
           apply_fn=M.apply) -> AttackResult:
    """Run the two-phase greedy loop against a score oracle.

    apply_fn(page, manipulation) -> page is the mutation hook; the default
    applies the real HTML manipulations, tests may substitute toy domains.
    """
    best_page = page.clone() if isinstance(page, HtmlPage) else page
    trace = AttackTrace(initial_score=0.0)

    def record(query, manip, score, accepted, phase, rnd):
        trace.steps.append(AttackStep(query, manip.name, score, accepted, phase, rnd))
        trace.best_score_history.append(min(trace.best_score_history[-1], score))

    def finish(best_score, error=None):
        if error is None:
            # Off-budget confirmation that the reported score is the page's.
            trace.confirmation_score = detector.score(best_page)
        evaded = best_score < detector.threshold
        return AttackResult(best_page, best_score, evaded, trace, error)

    try:
        best_score = detector.score(best_page)
    except OracleError as exc:
        return AttackResult(best_page, float("nan"), False, trace, str(exc))

    trace.initial_score = best_score
    trace.best_score_history = [best_score]
    query = 0

    try:
        for manip in config.sr_set:
            candidate = apply_fn(best_page, manip)
            score = detector.score(candidate)
            query += 1
            accepted = score < best_score
            if accepted:
                best_page, best_score = candidate, score
            record(query, manip, score, accepted, "SR", 0)
            if config.early_exit and best_score < detector.threshold:
                return finish(best_score)

        for rnd in range(1, config.derived_rounds + 1):
            candidates = []
            first_query = query + 1
            for manip in config.mr_set:
                candidate = apply_fn(best_page, manip)
                score = detector.score(candidate)
                query += 1
                candidates.append((candidate, score))
            cand_page, cand_score = get_best_candidate(candidates)
            improved = cand_score < best_score
            for offset, (manip, (cand, score)) in enumerate(zip(config.mr_set, candidates)):
                record(first_query + offset, manip, score,
                       improved and cand is cand_page, "MR", rnd)
            if improved:
                best_page, best_score = cand_page, cand_score
            if config.early_exit and best_score < detector.threshold:
                return finish(best_score)
    except OracleError as exc:
        return finish(best_score, error=str(exc))

    return finish(best_score)


# ---------------------------------------------------------------------------
# non-adaptive injection baselines
# ---------------------------------------------------------------------------

def minimal_injection_count(n_ext: int, n_int: int, susp_threshold_pct: int = 15) -> int:
    """Fewest hidden internal elements making ext/(ext+int+k) drop below
    the suspicious ratio, in exact integer arithmetic. 0 when nothing is
    external (the ratio is already 0)."""
    if n_ext <= 0:
        return 0
    # k > (100 - t) * n_ext / t - n_int  with t in percent
    numerator = (100 - susp_threshold_pct) * n_ext - susp_threshold_pct * n_int
    return max(0, numerator // susp_threshold_pct + 1)


def wa_r_baseline(page: HtmlPage, variant: str = "fixed50") -> HtmlPage:
    """Knowledge-free injection baselines: 'fixed50' appends a fixed 50
    hidden internal anchors to the body; 'threshold_aware' appends exactly
    as many as needed to pull the external-object ratio under the
    suspicious threshold, computed from the page's own census."""
    result = page.clone()
    if variant == "fixed50":
        count = M.FIXED_BASELINE_COUNT
    elif variant == "threshold_aware":
        c = census(result, SET_A)
        count = minimal_injection_count(c.n_ext, c.n_int)
    else:
        raise ValueError(f"unknown baseline variant {variant!r}")
    M._inject_hidden(result, result.body, "a",
                     [result.next_internal_href() for _ in range(count)])
    return result
