import math

import numpy as np
import pytest

from qunlearn import (
    TeleportScenario,
    alice_basis,
    effective_kraus,
    multi_outcome_recovery_probability,
    recovery_probability,
    run_protocol,
    unitary_witness,
    validate_povm,
)
from qunlearn.errors import DomainError
from qunlearn.rng import derive_seed, make_rng, random_pure_state
from qunlearn.teleport import shared_pair, sweep

THETAS = np.linspace(0.01, math.pi / 2, 9)


def test_alice_basis_bell_limit():
    basis = alice_basis(math.pi / 2)
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(basis[0], [r, 0, 0, r], atol=1e-12)
    np.testing.assert_allclose(basis[2], [r, 0, 0, -r], atol=1e-12)


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.0, math.pi / 2])
def test_alice_basis_orthonormal(theta):
    basis = alice_basis(theta)
    gram = np.array([[np.vdot(u, v) for v in basis] for u in basis])
    assert np.linalg.norm(gram - np.eye(4)) <= 1e-10


def test_alice_basis_domain():
    with pytest.raises(DomainError):
        alice_basis(-0.1)
    with pytest.raises(DomainError):
        alice_basis(2.0)


def test_effective_kraus_maximal_entanglement():
    povm = effective_kraus(math.pi / 2)
    for k in povm.kraus_ops:
        w = unitary_witness(k)
        assert w is not None
        assert w.scale**2 == pytest.approx(0.25, abs=1e-12)


def test_effective_kraus_singular_values():
    for theta in THETAS:
        povm = effective_kraus(theta)
        c2 = math.cos(theta / 2) ** 2
        s2 = math.sin(theta / 2) ** 2
        for j in (0, 1):
            sv = np.linalg.svd(povm[j].matrix, compute_uv=False)
            # unitary-proportional with probability sin(theta)^2 / 4
            assert sv[0] - sv[-1] <= 1e-12
            assert sv[0] ** 2 == pytest.approx(math.sin(theta) ** 2 / 4, abs=1e-12)
        for j in (2, 3):
            sv = np.linalg.svd(povm[j].matrix, compute_uv=False)
            np.testing.assert_allclose(sv, sorted([c2, s2], reverse=True), atol=1e-12)


def test_effective_kraus_complete():
    for theta in THETAS:
        assert validate_povm(effective_kraus(theta)).passed


def test_effective_kraus_against_projection_oracle():
    # independent reconstruction: apply the POVM to random payloads and
    # compare against the literal three-qubit projected amplitudes
    rng = make_rng(42)
    theta = 1.1
    povm = effective_kraus(theta)
    basis = alice_basis(theta)
    pair = shared_pair(theta)
    for _ in range(10):
        phi = random_pure_state(2, rng)
        full = np.kron(phi, pair).reshape(4, 2)
        for j in range(4):
            bob = basis[j].conj() @ full
            np.testing.assert_allclose(povm[j].matrix @ phi, bob, atol=1e-12)


def test_effective_kraus_degenerate():
    with pytest.raises(DomainError):
        effective_kraus(0.0)


def test_recovery_probability_values():
    assert recovery_probability(math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    assert recovery_probability(0.0) == pytest.approx(0.0, abs=1e-15)
    assert recovery_probability(math.pi / 3) == pytest.approx(0.5, abs=1e-12)


def test_recovery_probability_matches_povm_bound():
    for theta in THETAS:
        bound = multi_outcome_recovery_probability(effective_kraus(theta))
        assert bound.total_recoverable == pytest.approx(
            recovery_probability(theta), abs=1e-9
        )


def test_concentration_equivalence():
    # 1 - cos(theta) equals the pre-filtering success 2 sin^2(theta/2)
    for theta in THETAS:
        assert recovery_probability(theta) == pytest.approx(
            2 * math.sin(theta / 2) ** 2, abs=1e-12
        )


def test_run_protocol_maximal_entanglement_always_delivers():
    for seed in range(20):
        out = run_protocol(TeleportScenario(math.pi / 2, (0.6, 0.8j), seed=seed))
        assert out.delivered
        assert out.fidelity == pytest.approx(1.0, abs=1e-9)


def test_run_protocol_deterministic():
    s = TeleportScenario(1.0, (0.8, 0.6), seed=31415)
    assert run_protocol(s) == run_protocol(s)


def test_run_protocol_unit_fidelity_or_fail():
    theta = 1.0
    for t in range(500):
        out = run_protocol(
            TeleportScenario(theta, (0.8, 0.6), seed=derive_seed(7, t))
        )
        if out.delivered:
            assert out.fidelity == pytest.approx(1.0, abs=1e-9)
        else:
            assert out.bob_filter_applied and out.bob_filter_result is False


def test_run_protocol_success_rate():
    theta = math.pi / 3
    n = 20_000
    hits = sum(
        run_protocol(TeleportScenario(theta, (0.8, 0.6), seed=derive_seed(3, t))).delivered
        for t in range(n)
    )
    p = recovery_probability(theta)
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(hits / n - p) <= 3 * sigma


def test_scenario_validation():
    with pytest.raises(DomainError):
        TeleportScenario(1.0, (0.9, 0.6), seed=0)
    with pytest.raises(DomainError):
        TeleportScenario(3.0, (1.0, 0.0), seed=0)


def test_sweep_smoke():
    rows = sweep([0.5, math.pi / 2], n_runs=2000, master_seed=1)
    for row in rows:
        assert row.p_povm_bound == pytest.approx(row.p_analytic, abs=1e-9)
        sigma = math.sqrt(max(row.p_analytic * (1 - row.p_analytic), 1e-9) / row.n_runs)
        assert abs(row.p_montecarlo - row.p_analytic) <= 4 * sigma
    assert rows[1].p_montecarlo == pytest.approx(1.0, abs=1e-12)
