"""Property tests driven by hypothesis; the seeded 1000-case loops live in the acceptance suite."""

import random
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpo.analytics import regress_steps, type_stats
from cpo.errors import InsufficientDataError
from cpo.graph import KGraph
from cpo.reasoner import ConfidencePolicy, annotate, classify
from cpo.tagger import Step, WorkflowRecord
from families import THRESHOLDS, random_case

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_classification_invariants(seed):
    g, vetting, marks, policy = random_case(random.Random(seed))
    r = classify(g, vetting, marks, policy)
    assert r.rtw <= r.rtb
    assert not (r.rtw & r.mere_guess)
    assert r.mere_guess <= r.rtb
    again = classify(annotate(g, r), vetting, marks, policy)
    assert again.sets() == r.sets()


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from(THRESHOLDS), st.sampled_from(THRESHOLDS))
def test_rtb_antitone_in_threshold(seed, t1, t2):
    g, vetting, marks, _ = random_case(random.Random(seed))
    lo, hi = sorted((t1, t2))
    assert classify(g, vetting, marks, ConfidencePolicy(hi)).rtb <= classify(g, vetting, marks, ConfidencePolicy(lo)).rtb


@settings(max_examples=60, deadline=None)
@given(seeds, seeds)
def test_insertion_order_invariance(seed, shuffle_seed):
    g, vetting, marks, policy = random_case(random.Random(seed))
    rng = random.Random(shuffle_seed)
    facts = g.assertions
    rng.shuffle(facts)
    h = KGraph()
    for a in facts:
        h._add(a)
    vetting, marks = vetting[:], marks[:]
    rng.shuffle(vetting)
    rng.shuffle(marks)
    assert classify(h, vetting, marks, policy).to_dict() == classify(g, vetting, marks, policy).to_dict()


# -- analytics ----------------------------------------------------------------

CLASSES = ("A", "B", "C")
outcomes = st.integers(min_value=0, max_value=100).map(lambda k: Decimal(k) / 100)
records_strategy = st.lists(
    st.tuples(st.lists(st.sampled_from(CLASSES), min_size=1, max_size=3), outcomes), min_size=1, max_size=12
)


def _records(rows):
    return [
        WorkflowRecord("L", i, tuple(Step(f"p{i}.{k}", c, "") for k, c in enumerate(sig)), y)
        for i, (sig, y) in enumerate(rows)
    ]


@settings(max_examples=200, deadline=None)
@given(records_strategy, st.randoms(use_true_random=False))
def test_type_stats_permutation_invariant(rows, rnd):
    recs = _records(rows)
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    stats = type_stats(recs)
    assert stats == type_stats(shuffled)
    for s in stats:
        assert s.n >= 1 and 0 <= s.mean <= 1 and s.variance >= 0


@settings(max_examples=200, deadline=None)
@given(records_strategy, outcomes)
def test_new_signature_only_appends(rows, y):
    recs = _records(rows)
    before = type_stats(recs)
    novel = WorkflowRecord("L", 999, (Step("new", "Z", ""),), y)
    after = type_stats(recs + [novel])
    assert [s for s in after if s.signature != ("Z",)] == before
    assert len(after) == len(before) + 1


@pytest.mark.filterwarnings("ignore:dropping constant")
@settings(max_examples=200, deadline=None)
@given(records_strategy)
def test_r_squared_in_unit_interval(rows):
    try:
        rep = regress_steps(_records(rows))
    except InsufficientDataError:
        return
    assert Fraction(0) <= rep.r_squared <= 1
    assert len(rep.coefficients) == len(rep.features) + 1
