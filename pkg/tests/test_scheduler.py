import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carbonshift.errors import HorizonError, InfeasibleJobError
from carbonshift.scheduler import (
    BASELINE,
    INTERRUPTING,
    NON_INTERRUPTING,
    Assignment,
    Strategy,
    active_jobs,
    assignments_frame,
    emissions,
    schedule,
)
from carbonshift.workload import Job

from conftest import make_signal


def brute(job, values, strategy):
    """Cheapest placement by exhaustive enumeration, lexicographically first on ties."""
    w = values[job.release:job.deadline]
    if strategy == INTERRUPTING and job.interruptible:
        cands = itertools.combinations(range(len(w)), job.duration)
    else:
        cands = (tuple(range(s, s + job.duration)) for s in range(len(w) - job.duration + 1))
    best = min(cands, key=lambda c: (sum(w[i] for i in c), c))
    return tuple(job.release + i for i in best)


def test_interrupting_picks_lowest_slots():
    job = Job(0, 0, 5, 2, interruptible=True)
    a = schedule(job, [5, 1, 9, 1, 5], INTERRUPTING)
    assert a.slots == (1, 3)


def test_non_interrupting_picks_best_window():
    job = Job(0, 0, 5, 2, interruptible=True)
    # windows: 6, 10, 10, 6 -> earliest minimum
    assert schedule(job, [5, 1, 9, 1, 5], NON_INTERRUPTING).slots == (0, 1)


def test_constant_forecast_keeps_baseline():
    job = Job(0, 3, 20, 4, interruptible=True)
    flat = np.full(job.window, 7.0)
    base = schedule(job, flat, BASELINE)
    assert base.slots == (3, 4, 5, 6)
    assert schedule(job, flat, NON_INTERRUPTING) == base
    assert schedule(job, flat, INTERRUPTING) == base


def test_baseline_uses_planned_start():
    job = Job(0, 0, 10, 1, planned_start=4)
    assert schedule(job, np.zeros(10), BASELINE).slots == (4,)


def test_non_interruptible_job_never_split():
    job = Job(0, 0, 5, 2, interruptible=False)
    a = schedule(job, [5, 1, 9, 1, 5], INTERRUPTING)
    assert a.slots == (0, 1)
    a.check(job)


def test_short_forecast_rejected():
    with pytest.raises(HorizonError):
        schedule(Job(0, 0, 5, 2), [1, 2, 3], NON_INTERRUPTING)


def test_unknown_strategy():
    with pytest.raises(ValueError):
        Strategy("greedy")
    with pytest.raises(ValueError):
        schedule(Job(0, 0, 2, 1), [1, 2], "greedy")


def test_assignment_check_catches_violations():
    job = Job(0, 2, 8, 2)
    with pytest.raises(InfeasibleJobError):
        Assignment(0, (1, 2)).check(job)
    with pytest.raises(InfeasibleJobError):
        Assignment(0, (3, 5)).check(job)
    with pytest.raises(InfeasibleJobError):
        Assignment(0, (3,)).check(job)
    Assignment(0, (6, 7)).check(job)


def test_emissions_one_kw_one_slot():
    sig = make_signal([200.0, 400.0])
    job = Job(0, 0, 2, 1, power=1000.0)
    # 1 kW for half an hour at 200 g/kWh
    assert emissions(Assignment(0, (0,)), job, sig) == 100.0


def test_emissions_reject_empty_and_out_of_range():
    sig = make_signal([200.0, 400.0])
    job = Job(0, 0, 2, 1)
    with pytest.raises(InfeasibleJobError):
        emissions(Assignment(0, ()), job, sig)
    with pytest.raises(HorizonError):
        emissions(Assignment(0, (2,)), job, sig)


@given(st.lists(st.integers(0, 500).map(float), min_size=1, max_size=30), st.floats(1, 1e4))
@settings(max_examples=100, deadline=None)
def test_emissions_linear_in_power(values, power):
    sig = make_signal(values)
    slots = tuple(range(len(values)))
    a = emissions(Assignment(0, slots), Job(0, 0, len(values), len(values), power=1000.0), sig)
    b = emissions(Assignment(0, slots), Job(0, 0, len(values), len(values), power=power), sig)
    assert b == pytest.approx(a * power / 1000.0, rel=1e-12)


# -- properties ------------------------------------------------------------

@st.composite
def instances(draw, max_window=20):
    window = draw(st.integers(1, max_window))
    duration = draw(st.integers(1, window))
    release = draw(st.integers(0, 5))
    values = draw(st.lists(st.integers(0, 50).map(float), min_size=release + window, max_size=release + window + 3))
    job = Job(0, release, release + window, duration, draw(st.booleans()))
    return job, np.array(values)


@given(instances(max_window=12), st.sampled_from([NON_INTERRUPTING, INTERRUPTING]))
@settings(max_examples=300, deadline=None)
def test_matches_exhaustive_oracle(case, strategy):
    job, values = case
    a = schedule(job, values[job.release:job.deadline], strategy)
    assert a.slots == brute(job, values, strategy)


@given(instances(), st.sampled_from([BASELINE, NON_INTERRUPTING, INTERRUPTING]))
@settings(max_examples=300, deadline=None)
def test_assignments_are_feasible(case, strategy):
    job, values = case
    schedule(job, values[job.release:job.deadline], strategy).check(job)


@given(instances())
@settings(max_examples=300, deadline=None)
def test_dominance_under_perfect_forecast(case):
    job, values = case
    sig = make_signal(values)
    f = values[job.release:job.deadline]
    cost = {s: emissions(schedule(job, f, s), job, sig) for s in (BASELINE, NON_INTERRUPTING, INTERRUPTING)}
    assert cost[INTERRUPTING] <= cost[NON_INTERRUPTING] <= cost[BASELINE]


@given(instances(), st.integers(0, 3), st.sampled_from([NON_INTERRUPTING, INTERRUPTING]))
@settings(max_examples=300, deadline=None)
def test_wider_window_never_costs_more(case, extra, strategy):
    job, values = case
    extra = min(extra, len(values) - job.deadline)
    wide = Job(0, job.release, job.deadline + extra, job.duration, job.interruptible)
    sig = make_signal(values)
    narrow_cost = emissions(schedule(job, values[job.release:job.deadline], strategy), job, sig)
    wide_cost = emissions(schedule(wide, values[wide.release:wide.deadline], strategy), wide, sig)
    assert wide_cost <= narrow_cost


@given(instances(), st.integers(1, 7), st.integers(-50, 50), st.sampled_from([NON_INTERRUPTING, INTERRUPTING]))
@settings(max_examples=300, deadline=None)
def test_placement_invariant_under_positive_affine_map(case, scale, shift, strategy):
    job, values = case
    f = values[job.release:job.deadline]
    assert schedule(job, f, strategy) == schedule(job, f * scale + shift, strategy)


def test_active_jobs_and_frame():
    a = [Assignment(0, (0, 1)), Assignment(1, (1, 3))]
    np.testing.assert_array_equal(active_jobs(a, 5), [1, 2, 0, 1, 0])
    df = assignments_frame(a)
    assert list(df.columns) == ["job_id", "slot_index"]
    assert len(df) == 4
