"""Seed trees, reference trees, disclosure paths and leaf regeneration.

Trees are stored as flat arrays: node 0 is the root, node i has children
2i+1 and 2i+2, and the 2l leaves sit at indices [2l-1, 4l-2]. Round i of a
scheme owns leaf 2l-1+i; leaves beyond the first t rounds are padding.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PathMismatch
from .xof import TAG_TREE, frame, xof_expand


def parent(i: int) -> int:
    return 0 if i == 0 else (i - 1) // 2


def leaf_count(t: int) -> int:
    """Number of leaves 2l = 2^ceil(log2 t), with a minimum height of 1."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return 1 << max(1, (t - 1).bit_length())


def leaf_range(node: int, l2: int) -> tuple:
    """Half-open range of leaf positions covered by the subtree at `node`."""
    lo = hi = node
    while lo < l2 - 1:
        lo = 2 * lo + 1
        hi = 2 * hi + 2
    return lo - (l2 - 1), hi - (l2 - 1) + 1


def covered_leaves(node: int, l2: int, t: int) -> int:
    """Number of leaves under `node` among the first t (the paper's ell)."""
    lo, hi = leaf_range(node, l2)
    return max(0, min(hi, t) - lo)


@dataclass(frozen=True)
class SeedTree:
    l2: int
    nodes: tuple

    @property
    def size(self) -> int:
        return 2 * self.l2 - 1

    def leaf(self, i: int) -> bytes:
        return self.nodes[self.l2 - 1 + i]


@dataclass(frozen=True)
class ReferenceTree:
    bits: np.ndarray

    def __eq__(self, other):
        return isinstance(other, ReferenceTree) and np.array_equal(self.bits, other.bits)


def _child_seeds(seed: bytes, salt: bytes, index: int) -> tuple:
    lam = len(seed)
    both = xof_expand(frame(seed, salt), TAG_TREE, 2 * lam, index=index)
    return both[:lam], both[lam:]


def build_seed_tree(master: bytes, salt: bytes, t: int) -> SeedTree:
    """Derive the full 4l-1 node tree from a master seed and salt."""
    l2 = leaf_count(t)
    nodes = [b""] * (2 * l2 - 1)
    nodes[0] = master
    for i in range(l2 - 1):
        nodes[2 * i + 1], nodes[2 * i + 2] = _child_seeds(nodes[i], salt, i)
    return SeedTree(l2=l2, nodes=tuple(nodes))


def mask_from_digest(d: np.ndarray) -> np.ndarray:
    return (np.asarray(d) != 0).astype(np.int8)


def compute_seeds_to_publish(f: np.ndarray, l2: int) -> ReferenceTree:
    """Reference tree: leaves take f, internal nodes the OR of their children."""
    f = np.asarray(f, dtype=np.int8)
    if len(f) > l2:
        raise ValueError(f"mask length {len(f)} exceeds leaf count {l2}")
    x = np.zeros(2 * l2 - 1, dtype=np.int8)
    x[l2 - 1 : l2 - 1 + len(f)] = f
    for i in range(l2 - 2, -1, -1):
        x[i] = x[2 * i + 1] | x[2 * i + 2]
    return ReferenceTree(bits=x)


def published_nodes(x: ReferenceTree) -> list:
    """Indices i with x[i]=0 and x[Parent(i)]=1, ascending."""
    bits = x.bits
    return [
        i for i in range(len(bits)) if bits[i] == 0 and bits[parent(i)] == 1
    ]


def faulted_reference_tree(x: ReferenceTree, node: int) -> ReferenceTree:
    """Force x[node] to 0 and recompute the OR on its ancestors only.

    Descendants keep their values: this models a corruption seen by the
    bottom-up pass (or an equivalent post-hoc stuck-at/flip with ancestor
    update), so disclosure below `node` is unaffected.
    """
    bits = x.bits.copy()
    bits[node] = 0
    i = node
    while i != 0:
        p = parent(i)
        bits[p] = bits[2 * p + 1] | bits[2 * p + 2]
        i = p
    return ReferenceTree(bits=bits)


def seed_tree_paths(tree: SeedTree, f: np.ndarray) -> list:
    """Disclosed (node index, seed) pairs for mask f, ascending node index."""
    x = compute_seeds_to_publish(f, tree.l2)
    return [(i, tree.nodes[i]) for i in published_nodes(x)]


def _expand_cover(indexed_seeds, salt: bytes, l2: int) -> dict:
    """Leaf position -> seed map for everything under the given nodes."""
    leaves = {}
    for idx, seed in indexed_seeds:
        stack = [(idx, seed)]
        while stack:
            i, s = stack.pop()
            if i >= l2 - 1:
                leaves[i - (l2 - 1)] = s
            else:
                left, right = _child_seeds(s, salt, i)
                stack.append((2 * i + 1, left))
                stack.append((2 * i + 2, right))
    return leaves


def assign_wire_seeds(wire_seeds, x: ReferenceTree) -> list:
    """Pair transmitted seeds with the node indices implied by x."""
    idxs = published_nodes(x)
    if len(idxs) != len(wire_seeds):
        raise PathMismatch(
            f"expected {len(idxs)} disclosed nodes, got {len(wire_seeds)}"
        )
    return list(zip(idxs, wire_seeds))


def regenerate_leaves(wire_seeds, salt: bytes, f: np.ndarray, l2: int) -> dict:
    """Verifier-side leaf recovery: round -> seed for every f[i] = 0 round."""
    x = compute_seeds_to_publish(f, l2)
    indexed = assign_wire_seeds(wire_seeds, x)
    leaves = _expand_cover(indexed, salt, l2)
    return {i: s for i, s in leaves.items() if i < len(f) and f[i] == 0}


def seed_tree_update(wire_seeds, salt: bytes, d: np.ndarray, faulted_node: int, l2: int) -> dict:
    """Attacker-side leaf recovery under the faulted disclosure.

    Recovers every leaf covered by the published nodes of the faulted
    reference tree - including leaves under `faulted_node` whose digest
    entry is nonzero, which an honest disclosure would keep hidden.
    """
    f = mask_from_digest(d)
    x = faulted_reference_tree(compute_seeds_to_publish(f, l2), faulted_node)
    indexed = assign_wire_seeds(wire_seeds, x)
    leaves = _expand_cover(indexed, salt, l2)
    return {i: s for i, s in leaves.items() if i < len(d)}
