from itertools import combinations, product

import numpy as np
import pytest

from zkfault import less
from zkfault.errors import ZkfaultError
from zkfault.fault import (
    EFFECTIVE,
    INEFFECTIVE_CASE1,
    INEFFECTIVE_CASE2,
    NOT_INJECTED,
    FaultSpec,
    classify,
    faulted_sign,
)
from zkfault.monomial import mono_mul_partial, mono_transpose
from zkfault.seedtree import leaf_range

# worked-example setup: 2l = 8 leaves, digest (0,3,1,1,0,0,0,0)
EX_PARAMS = less.LessParams("less-ex", 10, 5, 7, 4, 8, 3, 4)
EX_DIGEST = np.array([0, 3, 1, 1, 0, 0, 0, 0])


@pytest.fixture(scope="module")
def keys():
    return less.keygen(EX_PARAMS, b"\x31" * 16, b"\x32" * 16)


def forced_outcome(keys, node, model="skip_store", p=1.0, d=EX_DIGEST):
    sk, _ = keys
    return faulted_sign(sk, b"ex", FaultSpec(model, node, p), b"\x33" * 16, force_digest=d)


def test_spec_validation():
    with pytest.raises(ZkfaultError):
        FaultSpec("nope", 1, 1.0)
    with pytest.raises(ZkfaultError):
        FaultSpec("skip_store", 1, 1.5)
    with pytest.raises(ZkfaultError):
        FaultSpec("skip_store", -1, 1.0)


def test_example2_fault_at_node1(keys):
    out = forced_outcome(keys, 1)
    assert out.injected
    assert out.outcome_class == INEFFECTIVE_CASE2
    assert out.truth.x_faulted.bits[0] == 0
    # TreeNode collapses to (seed_7)
    sk, _ = keys
    assert [i for i, _ in out.signature.tree_nodes] == [7]


def test_example3_fault_at_node3(keys):
    out = forced_outcome(keys, 3)
    assert out.outcome_class == EFFECTIVE
    assert [i for i, _ in out.signature.tree_nodes] == [2, 3]
    # responses are untouched: (Q_3^T Qb_1, Q_1^T Qb_2, Q_1^T Qb_3)
    sk, _ = keys
    honest = less.sign(sk, b"ex", b"\x33" * 16, force_digest=EX_DIGEST)
    assert out.signature.rsp == honest.rsp
    assert out.signature.cmt == honest.cmt and out.signature.salt == honest.salt
    ctx = less.sign_context(sk, b"ex", b"\x33" * 16, force_digest=EX_DIGEST)
    for k, i in enumerate((1, 2, 3)):
        want = mono_mul_partial(mono_transpose(sk.expanded[EX_DIGEST[i] - 1]), ctx.q_bars[i])
        assert out.signature.rsp[k] == want


def test_fault_on_zero_node_is_case1(keys):
    out = forced_outcome(keys, 2)  # whole right subtree is zero
    assert out.outcome_class == INEFFECTIVE_CASE1
    sk, _ = keys
    honest = less.sign(sk, b"ex", b"\x33" * 16, force_digest=EX_DIGEST)
    assert out.signature == honest or (
        out.signature.tree_nodes == honest.tree_nodes and out.signature.rsp == honest.rsp
    )


def test_not_injected(keys):
    out = forced_outcome(keys, 3, p=0.0)
    assert not out.injected and out.outcome_class == NOT_INJECTED
    sk, _ = keys
    honest = less.sign(sk, b"ex", b"\x33" * 16, force_digest=EX_DIGEST)
    assert out.signature.tree_nodes == honest.tree_nodes


def test_injection_probability():
    sk, _ = less.keygen(EX_PARAMS, b"\x35" * 16, b"\x36" * 16)
    hits = 0
    for i in range(200):
        out = faulted_sign(sk, b"p", FaultSpec("skip_store", 1, 0.5), i.to_bytes(16, "little"))
        hits += out.injected
    assert 60 < hits < 140
    for i in range(20):
        assert faulted_sign(sk, b"p", FaultSpec("skip_store", 1, 1.0), i.to_bytes(16, "little")).injected


def test_models_agree_on_one_to_zero():
    sk, _ = less.keygen(EX_PARAMS, b"\x37" * 16, b"\x38" * 16)
    for node in (1, 3, 8):
        outs = [
            forced_outcome((sk, None), node, model)
            for model in ("skip_store", "stuck_at_zero", "bit_flip")
        ]
        # honest value of every tested node is 1 under EX_DIGEST, so all
        # three models corrupt identically
        assert all(o.signature.tree_nodes == outs[0].signature.tree_nodes for o in outs)
        assert all(o.outcome_class == outs[0].outcome_class for o in outs)


def test_bit_flip_upward_is_case1(keys):
    out = forced_outcome(keys, 2, model="bit_flip")  # honest 0 flips to 1
    assert out.outcome_class == INEFFECTIVE_CASE1
    assert out.truth.x_faulted.bits[2] == 1


def test_skip_check_publishes_node(keys):
    out = forced_outcome(keys, 1, model="skip_check")
    assert out.outcome_class == EFFECTIVE  # subtree holds nonzero rounds
    assert 1 in [i for i, _ in out.signature.tree_nodes]
    out = forced_outcome(keys, 2, model="skip_check")
    assert out.outcome_class == INEFFECTIVE_CASE1  # nothing hidden below
    out = forced_outcome(keys, 0, model="skip_check")
    assert out.outcome_class == EFFECTIVE  # root seed reveals everything
    assert 0 in [i for i, _ in out.signature.tree_nodes]


def test_effective_signatures_still_verify(keys):
    sk, pk = keys
    accepted = 0
    for i in range(60):
        msg = b"stealth" + bytes([i])
        out = faulted_sign(sk, msg, FaultSpec("skip_store", 1, 1.0), i.to_bytes(16, "little"))
        if out.outcome_class == EFFECTIVE:
            assert less.verify(pk, msg, out.signature)
            accepted += 1
    assert accepted > 0


def test_classify_exhaustive_small_tree():
    # effective iff a nonzero leaf lies under the node and another outside
    l2, t = 8, 8
    for support in combinations(range(t), 3):
        d = np.zeros(t, dtype=np.int64)
        d[list(support)] = 1
        for node in range(2 * l2 - 1):
            lo, hi = leaf_range(node, l2)
            inside = any(lo <= p < hi for p in support)
            outside = any(not (lo <= p < hi) for p in support)
            want = EFFECTIVE if inside and outside else (
                INEFFECTIVE_CASE1 if not inside else INEFFECTIVE_CASE2
            )
            assert classify(d, node, "skip_store", l2) == want, (support, node)
