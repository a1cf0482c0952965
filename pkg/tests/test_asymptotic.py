import math

import numpy as np
import pytest

from qcap.asymptotic import (
    GammaCertificate,
    d_max,
    e_w,
    purified_output,
    q_gamma,
    q_theta,
    strong_converse_error,
)
from qcap.channels import channel_nr, choi, identity_channel, random_channel, tensor
from qcap.matops import HermMat, herm, partial_trace, partial_transpose, trace_norm


def max_entangled_state(d):
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return HermMat(np.outer(v, v.conj()), (d, d))


def random_density(d, rng):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T + 0.1 * np.eye(d)
    return rho / np.trace(rho).real


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("form", ["primal", "dual"])
def test_identity_rate(d, form):
    res = q_gamma(identity_channel(d), form=form)
    assert res.status == "optimal"
    assert abs(res.log_value - math.log2(d)) < 1e-6


def test_q_gamma_rejects_bad_form():
    with pytest.raises(ValueError):
        q_gamma(identity_channel(2), form="both")


@pytest.mark.parametrize("seed", [1, 9, 41])
def test_q_gamma_primal_dual_agree(seed):
    ch = random_channel(2, 3, d_env=2, seed=seed)
    p = q_gamma(ch, form="primal")
    d = q_gamma(ch, form="dual")
    assert abs(p.value - d.value) < 2e-8 * (1 + abs(p.value))


def test_primal_certificate_feasible():
    ch = random_channel(2, 2, d_env=2, seed=4)
    res = q_gamma(ch, form="primal")
    cert = res.certificate
    assert isinstance(cert, GammaCertificate)
    assert abs(np.trace(cert.rho).real - 1.0) < 1e-7
    assert np.linalg.eigvalsh(cert.R).min() > -1e-7
    rt = partial_transpose(herm(cert.R, (2, 2)), 1).data
    box = np.kron(cert.rho, np.eye(2))
    assert np.linalg.eigvalsh(box - rt).min() > -1e-6
    assert np.linalg.eigvalsh(box + rt).min() > -1e-6


def test_dual_certificate_feasible():
    ch = random_channel(2, 2, d_env=2, seed=4)
    res = q_gamma(ch, form="dual")
    cert = res.certificate
    j = choi(ch).mat.data
    assert np.linalg.eigvalsh(cert.V).min() > -1e-7
    assert np.linalg.eigvalsh(cert.Y).min() > -1e-7
    diff = partial_transpose(herm(cert.V - cert.Y, (2, 2)), 1).data - j
    assert np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)).min() > -1e-6
    marg = partial_trace(herm(cert.V + cert.Y, (2, 2)), 1).data
    assert np.linalg.eigvalsh(cert.mu * np.eye(2) - marg).min() > -1e-6
    assert abs(cert.mu - res.value) < 1e-6


def test_additivity_on_tensor_pair():
    n1 = random_channel(2, 2, d_env=2, seed=301)
    n2 = random_channel(2, 2, d_env=2, seed=302)
    a = q_gamma(n1).log_value
    b = q_gamma(n2).log_value
    ab = q_gamma(tensor(n1, n2)).log_value
    assert abs(ab - a - b) < 1e-5


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("form", ["primal", "dual"])
def test_witness_value_of_max_entangled(d, form):
    assert abs(e_w(max_entangled_state(d), form=form) - math.log2(d)) < 1e-6


def test_witness_value_of_separable_state_is_zero():
    rho = HermMat(np.eye(4) / 4.0, (2, 2))
    assert abs(e_w(rho)) < 1e-6


def test_witness_rejects_bad_input():
    with pytest.raises(ValueError):
        e_w(max_entangled_state(2), form="nope")
    with pytest.raises(ValueError):
        e_w(HermMat(np.eye(2) / 2, (2,)))
    neg = np.diag([0.5, 0.5, 0.5, -0.5])
    with pytest.raises(ValueError):
        e_w(HermMat(neg, (2, 2)))


def test_d_max_known_values():
    eye2 = HermMat(np.eye(2) / 2, (2,))
    quarter = HermMat(np.eye(2) / 4, (2,))
    assert abs(d_max(eye2, quarter) - 1.0) < 1e-12
    assert abs(d_max(eye2, eye2)) < 1e-12


def test_d_max_support_violation_warns_inf():
    rho = HermMat(np.eye(2) / 2, (2,))
    sigma = HermMat(np.diag([1.0, 0.0]), (2,))
    with pytest.warns(UserWarning):
        assert d_max(rho, sigma) == float("inf")


@pytest.mark.parametrize("seed", [5, 6])
def test_d_max_matches_feasibility_search(seed):
    # bisect the smallest mu with mu*sigma - rho >= 0
    rng = np.random.default_rng(seed)
    rho = HermMat(random_density(3, rng), (3,))
    sigma = HermMat(random_density(3, rng), (3,))
    lo, hi = 0.0, 64.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.linalg.eigvalsh(mid * sigma.data - rho.data).min() >= 0:
            hi = mid
        else:
            lo = mid
    assert abs(d_max(rho, sigma) - math.log2(hi)) < 1e-9


def test_purified_output_state():
    ch = random_channel(2, 2, d_env=2, seed=8)
    rng = np.random.default_rng(0)
    rho = random_density(2, rng)
    out = purified_output(ch, rho)
    assert out.dims == (2, 2)
    assert abs(np.trace(out.data).real - 1.0) < 1e-10
    assert np.linalg.eigvalsh(out.data).min() > -1e-10


def test_purified_output_validation():
    ch = identity_channel(2)
    with pytest.raises(ValueError):
        purified_output(ch, np.eye(2))  # trace 2
    with pytest.raises(ValueError):
        purified_output(ch, np.diag([1.5, -0.5]).astype(complex))
    with pytest.warns(UserWarning):
        purified_output(ch, np.diag([1.0, 0.0]).astype(complex))


def test_witness_route_matches_rate_at_certificate():
    ch = random_channel(2, 2, d_env=2, seed=7)
    res = q_gamma(ch, form="primal")
    out = purified_output(ch, res.certificate.rho)
    assert abs(e_w(out) - res.log_value) < 1e-4


def test_q_theta_identity():
    res = q_theta(identity_channel(2))
    assert res.status == "optimal"
    assert abs(res.value - 2.0) < 1e-6
    assert abs(res.log_value - 1.0) < 1e-6


@pytest.mark.parametrize("seed", [2, 13])
def test_q_theta_at_least_transpose_trace_norm(seed):
    # the completely bounded norm dominates the normalized trace norm of
    # the partially transposed Choi matrix
    ch = random_channel(2, 2, d_env=2, seed=seed)
    j = choi(ch).mat
    lower = trace_norm(partial_transpose(j, 1)) / ch.d_in
    res = q_theta(ch)
    assert res.value >= lower - 1e-7


def test_q_theta_strictly_above_rate_somewhere():
    ch = channel_nr(0.5)
    qg = q_gamma(ch)
    qt = q_theta(ch)
    # closed-form rate for the r = 1/2 member
    assert abs(qg.log_value - math.log2(1.5)) < 1e-6
    assert qt.log_value - qg.log_value > 0.01


def test_strong_converse_error_values():
    assert strong_converse_error(10, 1.5, 1.0) == pytest.approx(1 - 2.0**-5)
    assert strong_converse_error(10, 0.5, 1.0) == 0.0
    assert strong_converse_error(3, 1.0, 1.0) == 0.0
    assert 0.0 <= strong_converse_error(200, 2.0, 1.0) <= 1.0
    with pytest.raises(ValueError):
        strong_converse_error(0, 1.0, 1.0)
