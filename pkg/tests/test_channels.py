import json

import numpy as np
import pytest

from qcap.channels import (
    Channel,
    amplitude_damping,
    channel_nr,
    choi,
    depolarizing,
    from_json_dict,
    identity_channel,
    load_channel,
    random_channel,
    save_channel,
    tensor,
    to_json_dict,
)
from qcap.matops import herm, permute_factors


def bell_projectors():
    # qubit Bell basis, maximally entangled first
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    psi = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
    chi = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
    omg = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return [np.outer(v, v.conj()) for v in (phi, psi, chi, omg)]


def test_channel_rejects_non_trace_preserving():
    with pytest.raises(ValueError):
        Channel(kraus=(0.9 * np.eye(2),), d_in=2, d_out=2)


def test_channel_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        Channel(kraus=(np.eye(2),), d_in=2, d_out=3)


def test_apply_amplitude_damping_on_excited_state():
    ch = amplitude_damping(0.3)
    out = ch.apply(np.diag([0.0, 1.0]).astype(complex))
    assert np.allclose(out, np.diag([0.3, 0.7]))


def test_identity_choi_is_unnormalized_max_entangled():
    for d in (2, 3):
        j = choi(identity_channel(d)).mat.data
        v = np.zeros(d * d)
        v[:: d + 1] = 1.0
        assert np.allclose(j, np.outer(v, v))


def test_amplitude_damping_choi_matches_hand_matrix():
    r = 0.37
    s = np.sqrt(1 - r)
    expect = np.zeros((4, 4))
    expect[0, 0] = 1.0
    expect[0, 3] = expect[3, 0] = s
    expect[2, 2] = r
    expect[3, 3] = 1 - r
    assert np.allclose(choi(amplitude_damping(r)).mat.data, expect, atol=1e-14)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.75, 1.0])
def test_depolarizing_choi_spectrum(p):
    # 2(1-p) on the maximally entangled projector, 2p/3 on its complement
    j = choi(depolarizing(p)).mat.data
    props = bell_projectors()
    expect = 2 * (1 - p) * props[0] + (2 * p / 3) * sum(props[1:])
    assert np.allclose(j, expect, atol=1e-13)


def test_choi_trace_and_marginal():
    ch = random_channel(3, 2, d_env=2, seed=5)
    j = choi(ch)
    assert abs(np.trace(j.mat.data).real - 3.0) < 1e-10
    # output-side trace returns the identity on the input factor
    from qcap.matops import partial_trace

    marg = partial_trace(j.mat, 1)
    assert np.allclose(marg.data, np.eye(3), atol=1e-10)


def test_tensor_choi_is_permuted_kron():
    a = random_channel(2, 2, seed=11)
    b = random_channel(2, 3, seed=12)
    jab = choi(tensor(a, b)).mat
    ja, jb = choi(a).mat, choi(b).mat
    k = herm(np.kron(ja.data, jb.data), (2, 2, 2, 3))
    # reorder (A1 B1 A2 B2) -> (A1 A2 B1 B2)
    perm = permute_factors(k, (0, 2, 1, 3))
    assert np.allclose(jab.data, perm.data, atol=1e-12)
    assert jab.dims == (4, 6)


@pytest.mark.parametrize("r", [-0.1, 1.2])
def test_amplitude_damping_domain(r):
    with pytest.raises(ValueError):
        amplitude_damping(r)


@pytest.mark.parametrize("r", [-0.01, 0.51])
def test_channel_nr_domain(r):
    with pytest.raises(ValueError):
        channel_nr(r)


def test_channel_nr_is_trace_preserving_qutrit_to_qubit():
    ch = channel_nr(0.25)
    assert (ch.d_in, ch.d_out) == (3, 2)
    acc = sum(k.conj().T @ k for k in ch.kraus)
    assert np.allclose(acc, np.eye(3), atol=1e-12)


def test_random_channel_seeded_and_valid():
    a = random_channel(2, 2, d_env=3, seed=7)
    b = random_channel(2, 2, d_env=3, seed=7)
    c = random_channel(2, 2, d_env=3, seed=8)
    for ka, kb in zip(a.kraus, b.kraus):
        assert np.array_equal(ka, kb)
    assert any(not np.allclose(ka, kc) for ka, kc in zip(a.kraus, c.kraus))
    acc = sum(k.conj().T @ k for k in a.kraus)
    assert np.allclose(acc, np.eye(2), atol=1e-12)


def test_random_channel_env_too_small():
    with pytest.raises(ValueError):
        random_channel(4, 1, d_env=2, seed=0)


def test_json_roundtrip(tmp_path):
    ch = random_channel(2, 3, d_env=2, seed=3)
    back = from_json_dict(to_json_dict(ch))
    assert (back.d_in, back.d_out) == (2, 3)
    for ka, kb in zip(ch.kraus, back.kraus):
        assert np.allclose(ka, kb, atol=1e-15)
    path = tmp_path / "ch.json"
    save_channel(ch, str(path))
    again = load_channel(str(path))
    for ka, kb in zip(ch.kraus, again.kraus):
        assert np.allclose(ka, kb, atol=1e-15)


def test_json_malformed_payload():
    with pytest.raises(ValueError):
        from_json_dict({"d_in": 2, "d_out": 2})
    with pytest.raises(ValueError):
        from_json_dict({"d_in": 2, "d_out": 2, "kraus": "nope"})


def test_load_channel_bad_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValueError):
        load_channel(str(path))


def test_json_rejects_non_channel_kraus(tmp_path):
    ch = identity_channel(2)
    payload = to_json_dict(ch)
    payload["kraus"][0][0][0] = [2.0, 0.0]  # breaks trace preservation
    with pytest.raises(ValueError):
        from_json_dict(payload)
    path = tmp_path / "scaled.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError):
        load_channel(str(path))
