"""Attack-loop semantics: budget accounting, greedy equivalence against a
literal transcription, tie-breaking, and the injection baselines."""

import hashlib

import pytest

from phishevade import manipulations as M
from phishevade.detectors import Detector, OracleError
from phishevade.dom import structurally_equal
from phishevade.features import SET_A, census, f_objectRatio
from phishevade.optimizer import (AttackConfig, AttackConfigError, attack,
                                  get_best_candidate, minimal_injection_count,
                                  wa_r_baseline)

import pages
from pages import page_of


class ScriptedDetector(Detector):
    def __init__(self, fn, threshold=0.5):
        super().__init__()
        self.fn = fn
        self.threshold = threshold

    def _score(self, page):
        return self.fn(page)


def hash_scorer(trial: int):
    """Deterministic pseudo-random score per toy page."""
    def fn(page):
        digest = hashlib.sha256(f"{trial}:{page}".encode()).digest()
        return int.from_bytes(digest[:8], "big") / 2**64
    return fn


def toy_apply(log=None):
    """Toy mutation domain: a page is the tuple of applied manipulation
    names; applying appends. Optionally logs (parent, name) pairs."""
    def fn(page, manip):
        if log is not None:
            log.append((page, manip.name))
        return page + (manip.name,)
    return fn


def toy_config(n_sr=2, n_mr=1, budget=None, **kwargs):
    sr = [M.manipulation(name) for name in M.SR_NAMES[:n_sr]]
    mr = [M.manipulation(name) for name in M.MR_NAMES[:n_mr]]
    if budget is None:
        budget = len(sr) + 2 * len(mr)
    return AttackConfig(query_budget=budget, sr_set=sr, mr_set=mr, **kwargs)


def transcribe(z, score_of, sr, mr, rounds, apply_fn):
    """Direct, unadorned transcription of the two-phase greedy loop."""
    z_star = z
    s_star = score_of(z_star)
    accepted = []
    for t in sr:
        z_prime = apply_fn(z_star, t)
        s_prime = score_of(z_prime)
        if s_prime < s_star:
            s_star, z_star = s_prime, z_prime
            accepted.append(t.name)
    for _ in range(rounds):
        candidates = []
        for t in mr:
            z_prime = apply_fn(z_star, t)
            candidates.append((z_prime, score_of(z_prime), t.name))
        z_b, s_b, name_b = min(candidates, key=lambda c: c[1])
        first_minimal = next(c for c in candidates if c[1] == s_b)
        z_b, s_b, name_b = first_minimal
        if s_b < s_star:
            s_star, z_star = s_b, z_b
            accepted.append(name_b)
    return z_star, s_star, accepted


class TestBudgetAccounting:
    def test_default_sets_give_five_rounds_at_budget_36(self):
        cfg = AttackConfig(query_budget=36)
        assert len(cfg.sr_set) == 11
        assert len(cfg.mr_set) == 5
        assert cfg.derived_rounds == 5

    def test_trace_counts_exactly(self):
        cfg = AttackConfig(query_budget=36)
        det = ScriptedDetector(hash_scorer(1))
        result = attack((), det, cfg, apply_fn=toy_apply())
        trace = result.trace
        assert trace.phase_count("SR") == 11
        assert trace.phase_count("MR") == 25
        assert 1 + len(trace.steps) == 37  # evaluations including the init call
        assert trace.confirmation_score is not None
        assert trace.oracle_calls == 38  # plus the flagged confirmation
        assert det.query_count == trace.oracle_calls
        assert len(trace.best_score_history) == 37

    def test_budget_smaller_than_one_round_rejected(self):
        with pytest.raises(AttackConfigError):
            AttackConfig(query_budget=10)

    def test_leftover_budget_is_not_spent(self):
        cfg = toy_config(n_sr=2, n_mr=2, budget=9)  # (9 - 2) // 2 = 3 rounds
        assert cfg.derived_rounds == 3
        det = ScriptedDetector(hash_scorer(2))
        result = attack((), det, cfg, apply_fn=toy_apply())
        assert len(result.trace.steps) == 2 + 3 * 2


class TestGreedyEquivalence:
    @pytest.mark.parametrize("n_sr,n_mr,rounds", [(2, 1, 2), (3, 2, 3), (1, 3, 2)])
    def test_matches_transcription(self, n_sr, n_mr, rounds):
        for trial in range(120):
            score_of = hash_scorer(trial)
            cfg = toy_config(n_sr=n_sr, n_mr=n_mr,
                             budget=n_sr + rounds * n_mr)
            det = ScriptedDetector(score_of)
            result = attack((), det, cfg, apply_fn=toy_apply())
            expected_page, expected_score, expected_accepts = transcribe(
                (), score_of, cfg.sr_set, cfg.mr_set, cfg.derived_rounds, toy_apply())
            assert result.page == expected_page
            assert result.score == expected_score
            got_accepts = [s.manipulation for s in result.trace.steps if s.accepted]
            assert got_accepts == expected_accepts

    def test_history_non_increasing_over_randomized_runs(self):
        for trial in range(1000):
            cfg = toy_config(n_sr=2, n_mr=2, budget=10)
            det = ScriptedDetector(hash_scorer(trial))
            result = attack((), det, cfg, apply_fn=toy_apply())
            history = result.trace.best_score_history
            assert all(a >= b for a, b in zip(history, history[1:]))
            assert result.score <= result.trace.initial_score
            assert result.score == result.trace.confirmation_score

    def test_candidates_derive_from_round_snapshot(self):
        log = []
        cfg = toy_config(n_sr=1, n_mr=3, budget=10)
        det = ScriptedDetector(hash_scorer(9))
        attack((), det, cfg, apply_fn=toy_apply(log))
        mr_parents = [parent for parent, name in log if name in M.MR_NAMES]
        rounds = cfg.derived_rounds
        for r in range(rounds):
            batch = mr_parents[r * 3:(r + 1) * 3]
            assert len(set(batch)) == 1  # one shared snapshot per round


class TestBestCandidate:
    def test_minimum(self):
        assert get_best_candidate([("a", 0.3), ("b", 0.7)]) == ("a", 0.3)

    def test_tie_keeps_earliest(self):
        assert get_best_candidate([("a", 0.5), ("b", 0.5)]) == ("a", 0.5)

    def test_singleton(self):
        assert get_best_candidate([("only", 0.9)]) == ("only", 0.9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            get_best_candidate([])


class TestAgainstRealPages:
    def test_flat_objective_accepts_nothing(self):
        page = pages.load(pages.EXTERNAL_FORM, "http://phisher.test/")
        det = ScriptedDetector(lambda p: 1.0, threshold=0.5)
        cfg = AttackConfig(query_budget=36)
        result = attack(page, det, cfg)
        assert not any(s.accepted for s in result.trace.steps)
        assert structurally_equal(result.page.root, page.root)
        assert set(result.trace.best_score_history) == {1.0}
        assert not result.evaded

    def test_early_exit_saves_queries(self):
        page = pages.load(pages.EXTERNAL_FORM, "http://phisher.test/")
        scores = iter([0.9, 0.1])
        det = ScriptedDetector(lambda p: next(scores, 0.1), threshold=0.5)
        cfg = AttackConfig(query_budget=36, early_exit=True)
        result = attack(page, det, cfg)
        assert result.evaded
        assert len(result.trace.steps) == 1

    def test_oracle_failure_yields_partial_trace(self):
        page = pages.load(pages.EXTERNAL_FORM, "http://phisher.test/")
        calls = {"n": 0}

        def flaky(p):
            calls["n"] += 1
            if calls["n"] > 5:
                raise OracleError("connection dropped")
            return 0.8

        det = ScriptedDetector(flaky)
        result = attack(page, det, AttackConfig(query_budget=36))
        assert result.error is not None
        assert len(result.trace.steps) == 4  # init + 4 successful SR queries
        assert result.trace.confirmation_score is None

    def test_trace_serializes_to_json(self):
        import json

        page = pages.load(pages.BASIC_LOGIN)
        det = ScriptedDetector(lambda p: 0.4)
        result = attack(page, det, AttackConfig(query_budget=16))
        doc = json.loads(result.trace.to_json())
        assert doc["oracle_calls"] == result.trace.oracle_calls
        assert len(doc["steps"]) == len(result.trace.steps)


def brute_force_minimal_k(n_ext, n_int):
    k = 0
    while True:
        total = n_ext + n_int + k
        if n_ext == 0 or total == 0 or n_ext / total < 0.15:
            return k
        k += 1


class TestBaselines:
    def test_fixed50_injects_exactly_fifty(self):
        page = page_of("<p>x</p>")
        out = wa_r_baseline(page, "fixed50")
        anchors = [a for a in out.select({"a"}, "body") if a.has_attr("hidden")]
        assert len(anchors) == 50

    def test_threshold_aware_known_case(self):
        # 3 external, 0 internal: 3/(3+k) < 0.15 iff k > 17
        assert minimal_injection_count(3, 0) == 18

    def test_threshold_aware_no_externals(self):
        page = page_of('<img src="/only.png">')
        out = wa_r_baseline(page, "threshold_aware")
        assert len(out.select({"a"}, "body")) == 0

    def test_threshold_aware_against_brute_force(self):
        import random

        rng = random.Random(13)
        for _ in range(100):
            n_ext = rng.randint(0, 60)
            n_int = rng.randint(0, 80)
            assert minimal_injection_count(n_ext, n_int) == brute_force_minimal_k(n_ext, n_int)

    def test_threshold_aware_on_page_reaches_benign_band(self):
        page = page_of("".join(f'<img src="http://cdn{k}.test/x.png">' for k in range(4)))
        out = wa_r_baseline(page, "threshold_aware")
        assert f_objectRatio(out) == -1
        added = len(out.select({"a"}, "body"))
        c = census(page, SET_A)
        assert added == brute_force_minimal_k(c.n_ext, c.n_int)

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            wa_r_baseline(page_of(""), "bogus")


class TestRandomizedRealPageProperty:
    def test_invariants_hold_with_random_linear_detectors(self):
        # Full-stack property: real pages, real manipulations, randomized
        # linear scoring. History must never rise, the budget must be
        # respected, and the confirmation call must agree with the result.
        import numpy as np

        from phishevade.detectors import Detector
        from phishevade.evaluation import _phishing_page
        from phishevade.dom import parse_html
        from phishevade.features import extract_all
        import random as rnd

        class RandomLinear(Detector):
            def __init__(self, rng):
                super().__init__()
                self.w = rng.normal(scale=0.8, size=22)
                self.b = float(rng.normal())

            def _score(self, page):
                x = np.asarray(extract_all(page).as_list())
                return float(1.0 / (1.0 + np.exp(-(x @ self.w + self.b))))

        gen = rnd.Random(5)
        for trial in range(12):
            url, html = _phishing_page(trial, gen)
            page = parse_html(html, url)
            det = RandomLinear(np.random.default_rng(trial))
            cfg = AttackConfig(query_budget=21, rng_seed=trial)
            before = det.query_count
            result = attack(page, det, cfg)
            history = result.trace.best_score_history
            assert all(a >= b for a, b in zip(history, history[1:]))
            assert result.score <= result.trace.initial_score
            assert result.score == result.trace.confirmation_score
            assert len(result.trace.steps) == 11 + cfg.derived_rounds * 5
            assert det.query_count - before == result.trace.oracle_calls
            assert result.evaded == (result.score < det.threshold)
