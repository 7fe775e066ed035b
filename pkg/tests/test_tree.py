import numpy as np
import pytest

from ewspcodec.errors import InvalidDimensions
from ewspcodec.tree import (
    NodeKind,
    TreeKind,
    TreeTopology,
    block,
    coeff,
    get_topology,
    temporal_frame_children,
)
from ewspcodec.wavelet import DecompositionSpec

SMALL = [
    DecompositionSpec(3, 2, "53", "97", 8, 16, 16),
    DecompositionSpec(1, 1, "53", "97", 2, 4, 4),
    DecompositionSpec(2, 1, "53", "97", 4, 8, 12),
    DecompositionSpec(0, 2, "53", "97", 1, 8, 8),
]


def closure(topo, start):
    """Every node reachable from ``start`` through the NodeRef view."""
    seen, stack = [], list(start)
    while stack:
        node = stack.pop()
        seen.append((node.frame, node.row, node.col))
        stack.extend(topo.children(node))
    return seen


@pytest.mark.parametrize("spec", SMALL)
@pytest.mark.parametrize("kind", list(TreeKind))
def test_roots_cover_volume_exactly_once(spec, kind):
    topo = get_topology(kind, spec)
    seen = closure(topo, topo.root_refs())
    assert len(seen) == topo.size
    assert len(set(seen)) == topo.size


@pytest.mark.parametrize("kind", list(TreeKind))
def test_unique_parent_and_acyclic(kind):
    topo = get_topology(kind, SMALL[0])
    parent = topo.parent
    assert np.sum(parent < 0) == len(topo.roots)
    # walking up always terminates at a root within the tree height
    depth = topo.depth
    assert depth.min() == 0
    nonroot = np.flatnonzero(parent >= 0)
    assert np.all(depth[nonroot] == depth[parent[nonroot]] + 1)


def test_cif_root_count():
    spec = DecompositionSpec(4, 3, "53", "97", 16, 64, 64)
    roots = get_topology("ewspb", spec).root_refs()
    assert len(roots) == 64
    assert {(r.frame) for r in roots} == {0}
    assert roots[:4] == [coeff(0, 0, 0), coeff(0, 0, 1), coeff(0, 1, 0), coeff(0, 1, 1)]


def test_single_group_roots():
    spec = DecompositionSpec(1, 1, "53", "97", 2, 4, 4)
    assert len(get_topology("ewspb", spec).roots) == 4


def test_spatial_offspring_rule():
    spec = DecompositionSpec(1, 3, "53", "97", 2, 64, 64)
    topo = get_topology("ewspb", spec)
    # (3, 5) of LH2 in band coordinates; LH2 starts at column 16
    kids = topo.spatial_children(coeff(0, 3, 16 + 5))
    want = {(6, 32 + 10), (6, 32 + 11), (7, 32 + 10), (7, 32 + 11)}
    assert {(k.row, k.col) for k in kids} == want
    assert topo.spatial_children(coeff(0, 40, 40)) == []


def test_ll_group_roles():
    spec = DecompositionSpec(1, 2, "53", "97", 2, 16, 16)
    topo = get_topology("ewspb", spec)
    # a has no spatial offspring; b, c, d of the group at (gr, gc) own the
    # 2x2 block at (gr, gc) of LH2, HL2 and HH2 respectively
    assert topo.spatial_children(coeff(0, 0, 0)) == []
    assert {(k.row, k.col) for k in topo.spatial_children(coeff(0, 0, 1))} == \
        {(0, 4), (0, 5), (1, 4), (1, 5)}
    assert {(k.row, k.col) for k in topo.spatial_children(coeff(0, 1, 0))} == \
        {(4, 0), (4, 1), (5, 0), (5, 1)}
    assert {(k.row, k.col) for k in topo.spatial_children(coeff(0, 3, 3))} == \
        {(6, 6), (6, 7), (7, 6), (7, 7)}


def test_temporal_frame_parentage():
    spec = DecompositionSpec(4, 3, "53", "97", 16, 64, 64)
    kids = temporal_frame_children(spec)
    assert kids[0] == [1]
    assert kids[1] == [2, 3]
    assert kids[2] == [4, 5] and kids[3] == [6, 7]
    assert kids[7] == [14, 15]
    assert all(k == [] for k in kids[8:])


def test_temporal_child_blocks():
    spec = DecompositionSpec(4, 3, "53", "97", 16, 64, 64)
    topo = get_topology("ewspb", spec)
    assert topo.temporal_child_blocks(coeff(0, 2, 4)) == [block(1, 2, 4)]
    assert topo.temporal_child_blocks(block(1, 2, 4)) == [block(2, 2, 4), block(3, 2, 4)]
    assert topo.temporal_child_blocks(block(12, 2, 4)) == []
    assert topo.temporal_child_blocks(coeff(0, 2, 5)) == []


def test_split_block():
    a, rest = TreeTopology.split_block(block(3, 4, 6))
    assert a == coeff(3, 4, 6)
    assert rest == (coeff(3, 4, 7), coeff(3, 5, 6), coeff(3, 5, 7))
    with pytest.raises(ValueError):
        TreeTopology.split_block(coeff(0, 0, 0))


def test_block_children_match_flat_view():
    spec = SMALL[0]
    topo = get_topology("ewspb", spec)
    node = coeff(1, 0, 2)
    expanded = []
    for b in topo.temporal_child_blocks(node):
        a, rest = TreeTopology.split_block(b)
        expanded += [a, *rest]
    assert sorted(topo.children(node)) == sorted(expanded)


def test_depth_balance_in_block_trees():
    # every LL node of a temporal block tree sits at a depth fixed by its frame's level
    spec = DecompositionSpec(4, 2, "53", "97", 16, 16, 16)
    topo = get_topology("ewspb", spec)
    depth = topo.depth.reshape(spec.shape)
    a_depth = depth[:, 0:4:2, 0:4:2]
    for tb in spec.temporal_bands:
        vals = a_depth[tb.start : tb.start + tb.count]
        assert len(np.unique(vals)) == 1, tb.label


def test_asym_chains_colocated():
    spec = SMALL[0]
    topo = get_topology("asym", spec)
    kids = topo.asym_children(coeff(1, 5, 9))
    assert kids == [coeff(2, 5, 9), coeff(3, 5, 9)]
    low = topo.asym_children(coeff(0, 0, 1))
    assert coeff(1, 0, 1) in low and len(low) == 5
    assert topo.asym_children(coeff(7, 15, 15)) == []


def test_rejects_odd_ll():
    spec = DecompositionSpec(1, 2, "53", "97", 2, 12, 16)
    with pytest.raises(InvalidDimensions):
        get_topology("ewspb", spec)


def test_set_maxima_brute_force():
    spec = SMALL[2]
    rng = np.random.default_rng(5)
    for kind in TreeKind:
        topo = get_topology(kind, spec)
        mag = rng.random(topo.size)
        omax, dmax, lmax = topo.set_maxima(mag)
        for idx in rng.choice(np.flatnonzero(topo.has_children), 40):
            kids = topo.children_flat(idx)
            desc = [topo.flat(*n[1:]) for n in
                    [c for k in kids for c in [coeff(*topo.unflat(k))]]]
            stack, allv = list(kids), []
            while stack:
                k = stack.pop()
                allv.append(k)
                stack.extend(topo.children_flat(k))
            assert omax[idx] == mag[desc].max()
            assert dmax[idx] == mag[allv].max()
            grand = [k for k in allv if k not in set(kids.tolist())]
            assert lmax[idx] == (mag[grand].max() if grand else 0.0)


def test_nodekind_values():
    assert NodeKind.TEMPORAL_BLOCK != NodeKind.SPATIAL_COEFF
    assert get_topology("asym3d", SMALL[1]).id == TreeKind.ASYM3D
