import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentctl.theory import (
    CounterexampleState,
    DiscreteJoint,
    constant_code_instance,
    counterexample_objectives,
    counterexample_train,
    injective_instance,
    mi_gap_check,
    mutual_information,
    random_instance,
)
from latentctl.theory.migap import coded_joint, witness


# --- information-gap bound ------------------------------------------------


@pytest.mark.parametrize("seed", range(20))
def test_random_instances_satisfy_bound(seed):
    joint = random_instance(seed)
    res = mi_gap_check(joint)
    assert res.converged
    assert res.l_star <= res.gap + 1e-9
    assert res.l_star >= -1e-9
    assert abs(res.witness_loss - res.gap) <= 1e-9
    assert res.gap == res.mi_xy - res.mi_ab


@pytest.mark.parametrize("seed", range(10))
def test_coding_cannot_create_information(seed):
    joint = random_instance(seed, nx=5, nu=3, ny=6, n_a=3, n_b=2)
    res = mi_gap_check(joint)
    assert res.mi_ab <= res.mi_xy + 1e-12


def test_injective_codes_close_the_gap():
    joint = injective_instance(0)
    res = mi_gap_check(joint)
    assert res.gap == 0.0
    assert res.l_star <= 1e-9


def test_constant_code_gap_is_full_information():
    joint = constant_code_instance(0)
    res = mi_gap_check(joint)
    assert res.mi_ab == 0.0
    assert res.gap == res.mi_xy
    assert abs(res.witness_loss - res.gap) <= 1e-12


def test_witness_is_a_conditional_distribution():
    joint = random_instance(3)
    psi1, psi2 = witness(joint)
    assert psi1.shape == (joint.p.shape[1],)
    assert np.all(psi1 >= 0) and abs(psi1.sum() - 1.0) < 1e-12
    # psi2 rows: r(a | b), a distribution over a for each b
    assert np.allclose(psi2.sum(axis=0), 1.0)


def test_coded_joint_marginalizes_correctly():
    joint = random_instance(4, n_a=2, n_b=2)
    pab = coded_joint(joint)
    assert pab.shape == (joint.n_a, joint.n_b)
    assert abs(pab.sum() - 1.0) < 1e-12
    total = np.zeros_like(pab)
    for i in range(joint.p.shape[0]):
        for j in range(joint.p.shape[1]):
            total[joint.e[i], joint.f[j]] += joint.p[i, j]
    assert np.allclose(pab, total)


def test_mutual_information_of_independent_table_is_zero():
    p = np.outer([0.3, 0.7], [0.2, 0.5, 0.3])
    assert abs(mutual_information(p)) < 1e-12


def test_mutual_information_of_identity_is_entropy():
    p = np.diag([0.25, 0.25, 0.5])
    expected = -(0.25 * math.log(0.25) * 2 + 0.5 * math.log(0.5))
    assert abs(mutual_information(p) - expected) < 1e-12


def test_joint_validation():
    with pytest.raises(ValueError):
        DiscreteJoint(np.full((2, 2), 0.3), np.zeros(2, int), np.zeros(2, int))
    with pytest.raises(ValueError):
        DiscreteJoint(np.full((65, 1), 1 / 65), np.zeros(65, int),
                      np.zeros(1, int))
    with pytest.raises(ValueError):
        DiscreteJoint(np.full((2, 2), 0.25), np.zeros(3, int), np.zeros(2, int))


# --- scalar counterexample ------------------------------------------------


def closed_form_cpc(eta, sigma):
    return math.log(2.0) - math.log(1.0 + math.exp(-2.0 * eta / sigma**2))


def test_objectives_match_closed_forms():
    st_ = CounterexampleState(eta=1.0, sigma=1.0)
    cpc, cons = counterexample_objectives(st_)
    assert abs(cpc - closed_form_cpc(1.0, 1.0)) < 1e-12
    assert abs(cons - (-0.5 * math.log(2 * math.pi))) < 1e-12

    sharp = CounterexampleState(eta=1.0, sigma=1e-3)
    cpc, cons = counterexample_objectives(sharp)
    assert abs(cpc - math.log(2.0)) < 1e-12
    # perfect prediction with tiny variance: density is high...
    assert abs(cons - (-0.5 * math.log(2 * math.pi * 1e-6))) < 1e-9
    # ...but any mean mismatch at that variance is catastrophic
    _, off = counterexample_objectives(CounterexampleState(1.5, 1e-3))
    assert off < -1e4


def test_cpc_increases_with_eta():
    values = [counterexample_objectives(CounterexampleState(e, 1.0))[0]
              for e in np.linspace(0.1, 8.0, 25)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_cons_penalizes_leaving_eta_one():
    best = counterexample_objectives(CounterexampleState(1.0, 0.5))[1]
    for eta in (0.3, 0.7, 1.5, 3.0):
        assert counterexample_objectives(CounterexampleState(eta, 0.5))[1] < best


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 50.0), st.floats(0.01, 10.0))
def test_cpc_bounded_by_ln_two(eta, sigma):
    cpc, _ = counterexample_objectives(CounterexampleState(eta, sigma))
    assert cpc <= math.log(2.0) + 1e-12
    assert cpc >= 0.0


def test_state_validation():
    with pytest.raises(ValueError):
        CounterexampleState(eta=0.0, sigma=1.0)
    with pytest.raises(ValueError):
        CounterexampleState(eta=1.0, sigma=-1.0)


def test_zero_steps_returns_the_starting_point():
    out = counterexample_train("cpc_only", steps=0)
    assert (out.eta, out.sigma) == (0.5, 1.0)
    out = counterexample_train("cpc_plus_cons", steps=0)
    assert (out.eta, out.sigma) == (0.5, 1.0)


def test_unknown_selector_rejected():
    with pytest.raises(ValueError):
        counterexample_train("everything", steps=1)


def test_contrast_only_diverges_and_joint_objective_does_not():
    runaway = counterexample_train("cpc_only", steps=5000)
    assert runaway.eta > 10.0
    assert runaway.sigma == 1.0  # not trained under this selector

    anchored = counterexample_train("cpc_plus_cons", steps=5000)
    assert 0.9 <= anchored.eta <= 1.1
    assert anchored.sigma < 0.1
