import numpy as np
import pytest

from zkfault import cross
from zkfault.attack_cross import (
    CrossFaultSpec,
    cross_faulted_sign,
    detect_effective_cross,
    recover_secret_cross,
    run_campaign_cross,
)
from zkfault.cross import (
    CROSS_PARAM_SETS,
    MerkleTree,
    RestrictedVector,
    cross_check_response,
    cross_keygen,
    cross_sign,
    group_apply,
    group_quotient,
    public_key,
    verify_merkle,
)
from zkfault.errors import NoLeakedRound
from zkfault.fault import EFFECTIVE, INEFFECTIVE_CASE1, INEFFECTIVE_CASE2

DESK = CROSS_PARAM_SETS["cross-desk"]
TINY = CROSS_PARAM_SETS["cross-tiny"]


def test_params_validation():
    with pytest.raises(ValueError):
        cross.CrossParams("bad", 127, 5, 2, 30, 15, 32, 16)  # 5 does not divide 126
    with pytest.raises(ValueError):
        cross.CrossParams("bad", 127, 7, 3, 30, 15, 32, 16)  # order(3) != 7


def test_group_apply_examples():
    # p=127, z=7, g=2: exps (1) acting on (3) gives (6)
    sigma = RestrictedVector(exps=np.array([1]))
    assert group_apply(DESK, sigma, np.array([3])).tolist() == [6]
    ident = RestrictedVector(exps=np.zeros(4, dtype=np.int64))
    x = np.array([5, 10, 20, 40])
    assert np.array_equal(group_apply(DESK, ident, x), x)


def test_group_quotient():
    e = RestrictedVector(exps=np.array([3]))
    ep = RestrictedVector(exps=np.array([5]))
    assert group_quotient(DESK, e, ep).exps.tolist() == [5]  # 3 - 5 mod 7
    assert group_quotient(DESK, e, e).exps.tolist() == [0]
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = RestrictedVector(exps=rng.integers(0, 7, size=6))
        b = RestrictedVector(exps=rng.integers(0, 7, size=6))
        sigma = group_quotient(DESK, a, b)
        assert np.array_equal(group_apply(DESK, sigma, b.value(DESK)), a.value(DESK))
    # apply then apply-inverse round trip
    x = rng.integers(0, 127, size=6)
    s = RestrictedVector(exps=rng.integers(0, 7, size=6))
    s_inv = RestrictedVector(exps=(-s.exps) % 7)
    assert np.array_equal(group_apply(DESK, s, group_apply(DESK, s_inv, x)), x)


def test_keygen():
    keys = cross_keygen(DESK, b"\x61" * 16)
    assert np.array_equal(keys.e.value(DESK) @ keys.h.T % DESK.p, keys.s)
    assert np.all((keys.e.exps >= 0) & (keys.e.exps < DESK.z))
    again = cross_keygen(DESK, b"\x61" * 16)
    assert again.e == keys.e and np.array_equal(again.h, keys.h)


def test_merkle_roundtrip():
    leaves = [bytes([i]) * 32 for i in range(11)]
    tree = MerkleTree(leaves, 32)
    for i, leaf in enumerate(leaves):
        pr = tree.proof(i)
        assert verify_merkle(tree.root(), leaf, i, pr, 11, 32)
        assert not verify_merkle(tree.root(), b"\xff" * 32, i, pr, 11, 32)
        if i:
            assert not verify_merkle(tree.root(), leaf, i - 1, pr, 11, 32)


def test_sign_structure_and_consistency():
    keys = cross_keygen(DESK, b"\x62" * 16)
    pub = public_key(keys)
    sig = cross_sign(keys, b"msg", b"\x63" * 16)
    assert len(sig.f_list) == DESK.t - DESK.w_reveal
    assert sorted(sig.f_list) == sorted(sig.merkle_proofs)
    assert cross_check_response(pub, b"msg", sig)
    assert not cross_check_response(pub, b"other", sig)


def test_check_rejects_corruption():
    keys = cross_keygen(DESK, b"\x64" * 16)
    pub = public_key(keys)
    sig = cross_sign(keys, b"c", b"\x65" * 16)
    i0 = min(sig.merkle_proofs)
    bad_proofs = dict(sig.merkle_proofs)
    bad_proofs[i0] = [b"\x00" * len(x) for x in bad_proofs[i0]]
    bad = cross.CrossSignature(sig.salt, sig.c0, sig.c1, sig.h, sig.seed_path, bad_proofs, sig.f_list)
    assert not cross_check_response(pub, b"c", bad)
    bad = cross.CrossSignature(sig.salt, sig.c0, sig.c1, b"\x00" * len(sig.h), sig.seed_path, sig.merkle_proofs, sig.f_list)
    assert not cross_check_response(pub, b"c", bad)
    y0, s0, c10 = sig.f_list[i0]
    bad_f = dict(sig.f_list)
    bad_f[i0] = ((y0 + 1) % DESK.p, s0, c10)
    bad = cross.CrossSignature(sig.salt, sig.c0, sig.c1, sig.h, sig.seed_path, sig.merkle_proofs, bad_f)
    assert not cross_check_response(pub, b"c", bad)


def test_revealed_rounds_match_hashes():
    keys = cross_keygen(TINY, b"\x66" * 16)
    sig = cross_sign(keys, b"rv", b"\x67" * 16)
    # every hidden round's y satisfies its own h chain entry implicitly via
    # cross_check_response; here check the round data is self-consistent
    for i, (y, sigma, _) in sig.f_list.items():
        assert y.shape == (TINY.n,)
        assert np.all((sigma.exps >= 0) & (sigma.exps < TINY.z))


def test_wire_roundtrip():
    keys = cross_keygen(TINY, b"\x68" * 16)
    pub = public_key(keys)
    sig = cross_sign(keys, b"wire", b"\x69" * 16)
    sig2 = cross.cross_sig_from_json(cross.cross_sig_to_json(sig), TINY)
    assert sig2.seed_path == sig.seed_path
    assert cross_check_response(pub, b"wire", sig2)


def test_fault_detect_recover_cycle():
    keys = cross_keygen(DESK, b"\x6a" * 16)
    pub = public_key(keys)
    eff = 0
    for i in range(60):
        msg = b"f" + bytes([i])
        out = cross_faulted_sign(keys, msg, CrossFaultSpec(1, 1.0), i.to_bytes(16, "little"))
        det = detect_effective_cross(pub, msg, out.signature, 1)
        assert det == (out.outcome_class == EFFECTIVE)
        if det:
            eff += 1
            e = recover_secret_cross(pub, msg, out.signature, 1)
            assert e == keys.e
            assert np.array_equal(e.value(DESK) @ pub.h.T % DESK.p, pub.s)
            assert cross_check_response(pub, msg, out.signature)
    assert eff > 0


def test_honest_signature_rejected_everywhere():
    keys = cross_keygen(TINY, b"\x6b" * 16)
    pub = public_key(keys)
    sig = cross_sign(keys, b"h", b"\x6c" * 16)
    for node in range(TINY.tree_size):
        assert not detect_effective_cross(pub, b"h", sig, node)


def test_fault_classes_small_tree():
    keys = cross_keygen(TINY, b"\x6d" * 16)
    pub = public_key(keys)
    # force b so that rounds 0..3 are revealed, 4..7 hidden (t=8, w_reveal=4)
    b = np.array([1, 1, 1, 1, 0, 0, 0, 0])
    out = cross_faulted_sign(keys, b"cl", CrossFaultSpec(1, 1.0), b"\x6e" * 16, force_b=b)
    # node 1 covers rounds 0..3, all revealed: nothing hidden below
    assert out.outcome_class == INEFFECTIVE_CASE1
    assert not detect_effective_cross(pub, b"cl", out.signature, 1, force_b=b)
    out = cross_faulted_sign(keys, b"cl", CrossFaultSpec(2, 1.0), b"\x6e" * 16, force_b=b)
    # node 2 covers all hidden rounds: the root dies
    assert out.outcome_class == INEFFECTIVE_CASE2
    assert not detect_effective_cross(pub, b"cl", out.signature, 2, force_b=b)
    out = cross_faulted_sign(keys, b"cl", CrossFaultSpec(5, 1.0), b"\x6e" * 16, force_b=b)
    # node 5 covers hidden rounds 4,5; hidden rounds 6,7 stay outside
    assert out.outcome_class == EFFECTIVE
    assert detect_effective_cross(pub, b"cl", out.signature, 5, force_b=b)
    e = recover_secret_cross(pub, b"cl", out.signature, 5, force_b=b)
    assert e == keys.e


def test_no_leaked_round():
    keys = cross_keygen(TINY, b"\x6f" * 16)
    pub = public_key(keys)
    b = np.array([1, 1, 1, 1, 0, 0, 0, 0])
    honest = cross_sign(keys, b"nl", b"\x70" * 16, force_b=b)
    with pytest.raises(NoLeakedRound):
        recover_secret_cross(pub, b"nl", honest, 1, force_b=b)


def test_campaigns():
    rep = run_campaign_cross(DESK, 1, 1.0, "full", 10, b"\x71")
    assert rep.n_avg == 1.0 and rep.mean_x == 1.0 and rep.all_exact
    rep = run_campaign_cross(DESK, 1, 0.5, "digest_only", 200, b"\x72")
    assert rep.n_avg == 1.0 and rep.scheme == "cross"
    a = run_campaign_cross(DESK, 1, 1.0, "digest_only", 300, b"\x73", threads=1)
    b2 = run_campaign_cross(DESK, 1, 1.0, "digest_only", 300, b"\x73", threads=3)
    assert a.to_json() == b2.to_json()
