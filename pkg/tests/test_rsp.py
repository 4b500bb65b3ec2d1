from __future__ import annotations

import numpy as np
import pytest

from composable.channels import Verdict, distinguishability
from composable.execution import enumerate_runs, run_system
from protocols.exceptions import PreconditionError
from protocols.rsp import (
    RspTranscript,
    correction_delta,
    cx_gadget,
    rsp_ideal_system,
    rsp_real_system,
    rsp_simulated_system,
    rsp_unsimulated_system,
)
from quantum.angles import A, Angle
from quantum.qstate import PureState, fidelity, plus_vector, zrot

THETA = Angle(3)


def _projector(angle: Angle) -> np.ndarray:
    vector = plus_vector(angle)
    return np.outer(vector, vector.conj())


def test_correction_delta():
    shares = [(Angle(1), 1), (Angle(2), 0)]
    assert correction_delta(THETA, 0, shares) == Angle(8)
    assert correction_delta(THETA, 1, shares) == Angle(2)
    transcript = RspTranscript({1: shares[0], 2: shares[1]}, 1, Angle(2), THETA)
    assert transcript.is_consistent()
    assert not transcript.is_consistent(Angle(4))
    assert transcript.as_dict() == {"shares": {"1": [1, 1], "2": [2, 0]}, "b": 1, "delta": 2}


def test_real_system_interfaces():
    honest = rsp_real_system(2, 1)
    assert honest.name == "πRSP[n=2,k=1]"
    assert set(honest.interface_names) == {"C1", "S"}
    coalition = rsp_real_system(3, 1, dishonest_clients=[3])
    assert set(coalition.interface_names) == {"C1", "S", "net.C3"}


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_honest_run_prepares_rotated_plus(seed):
    result = run_system(rsp_real_system(2, 1), {("C1", "theta"): THETA}, seed=seed)
    assert np.allclose(result.state(("S", "psi")).matrix, _projector(THETA))
    transcript = result.audit["rsp"]
    assert transcript.theta == THETA
    assert transcript.is_consistent()


def test_honest_runs_share_a_fingerprint():
    system = rsp_real_system(3, 2)
    fingerprints = {
        run_system(system, {("C2", "theta"): Angle(5)}, seed=seed).fingerprint(("S", "psi")) for seed in range(4)
    }
    assert len(fingerprints) == 1


def test_invalid_parameters():
    with pytest.raises(PreconditionError):
        rsp_real_system(1, 1)
    with pytest.raises(PreconditionError):
        rsp_real_system(2, 3)
    with pytest.raises(PreconditionError):
        rsp_real_system(2, 1, dishonest_clients=[1])
    with pytest.raises(PreconditionError):
        rsp_simulated_system(2, 1, dishonest_clients=[5])


def test_cx_gadget_rotates_by_signed_theta():
    first, second = cx_gadget(THETA)
    assert np.allclose(first * np.sqrt(2), zrot(THETA))
    assert np.allclose(second * np.sqrt(2) * np.conj(THETA.phase), zrot(-THETA))
    assert np.allclose(first.conj().T @ first + second.conj().T @ second, np.eye(2))


def test_simulator_systems_expose_the_real_interfaces():
    real = rsp_real_system(2, 1, dishonest_clients=[2])
    simulated = rsp_simulated_system(2, 1, dishonest_clients=[2])
    assert simulated.name == "RSP∘σD[n=2,k=1]"
    assert set(simulated.interface_names) == set(real.interface_names)
    server_real = rsp_real_system(2, 1, dishonest_server=True)
    server_simulated = rsp_simulated_system(2, 1, dishonest_server=True)
    assert server_simulated.name == "RSP∘σDS[n=2,k=1]"
    assert set(server_simulated.interface_names) == set(server_real.interface_names)


@pytest.mark.slow
def test_honest_protocol_matches_ideal_resource():
    report = distinguishability(rsp_real_system(2, 1), rsp_ideal_system(2, 1))
    assert report.epsilon == pytest.approx(0.0, abs=1e-9)
    assert report.verdict is Verdict.PASS


@pytest.mark.slow
def test_dishonest_client_is_simulated():
    real = rsp_real_system(2, 1, dishonest_clients=[2])
    assert distinguishability(real, rsp_simulated_system(2, 1, dishonest_clients=[2])).verdict is Verdict.PASS
    blank = distinguishability(real, rsp_unsimulated_system(2, 1, dishonest_clients=[2]))
    assert blank.verdict is Verdict.FAIL
    assert blank.epsilon > 0.1


@pytest.mark.parametrize("clients", [2, pytest.param(3, marks=pytest.mark.slow)])
def test_every_branch_prepares_rotated_plus(clients):
    system = rsp_real_system(clients, 1)
    for theta in A:
        for branch in enumerate_runs(system, {("C1", "theta"): theta}):
            labels = branch.outputs[("S", "psi")]
            target = PureState.from_vector(labels, plus_vector(theta))
            assert fidelity(target, branch.reduced_state(labels)) >= 1 - 1e-10


def test_dishonest_client_among_three_is_simulated():
    domains = {
        ("C1", "theta"): [Angle(0), THETA],
        ("net.C3", "theta_r"): [(Angle(1), 0), (Angle(5), 1)],
    }
    real = rsp_real_system(3, 1, dishonest_clients=[3])
    simulated = rsp_simulated_system(3, 1, dishonest_clients=[3])
    report = distinguishability(real, simulated, classical_inputs=domains)
    assert report.epsilon == pytest.approx(0.0, abs=1e-9)
    assert report.verdict is Verdict.PASS


@pytest.mark.slow
def test_dishonest_server_is_simulated():
    real = rsp_real_system(2, 1, dishonest_server=True)
    report = distinguishability(real, rsp_simulated_system(2, 1, dishonest_server=True))
    assert report.epsilon == pytest.approx(0.0, abs=1e-9)
    assert report.verdict is Verdict.PASS
