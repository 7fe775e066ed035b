"""Parent/child topologies over a GOP coefficient volume.

Two trees are provided.

``EWSPB`` (significance probability balancing tree)
    Roots are the coarsest ``LL`` coefficients of the lowest temporal
    frame(s), taken as 2x2 groups ``a b / c d``.  ``b``, ``c`` and ``d`` root
    ordinary SPIHT spatial orientation trees inside their frame.  ``a`` roots a
    temporal-domain block tree: its offspring are the co-located 2x2 ``LL``
    blocks of its temporal child frames.  Each such block splits the same way
    (top-left continues the temporal tree, the other three root spatial
    trees), so every frame is covered.  Frame parentage is dyadic: a lowest
    band frame has one child (the coarsest high band frame with the same
    index), and a high band frame ``k`` at level ``j`` has frames ``2k`` and
    ``2k+1`` of level ``j-1``.

``ASYM3D`` (baseline asymmetric tree)
    Spatial SPIHT trees inside the lowest temporal frame(s); every coefficient
    of a frame with temporal children additionally parents the co-located
    coefficient (same row and column) in each temporal child frame, so the
    spatial tree continues as temporal chains and the tree depth is the sum of
    the spatial and temporal depths.

Both topologies are exposed coefficient-by-coefficient through flat indices
``(frame * height + row) * width + col`` as CSR child lists, which is what the
coder and the analysis use.  The ``NodeRef`` methods are the readable view of
the same structure.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

from .errors import InvalidDimensions
from .wavelet import DecompositionSpec


class TreeKind(enum.IntEnum):
    EWSPB = 0
    ASYM3D = 1


class NodeKind(enum.IntEnum):
    SPATIAL_COEFF = 0
    TEMPORAL_BLOCK = 1


class NodeRef(NamedTuple):
    kind: NodeKind
    frame: int
    row: int
    col: int


def coeff(frame: int, row: int, col: int) -> NodeRef:
    return NodeRef(NodeKind.SPATIAL_COEFF, frame, row, col)


def block(frame: int, row: int, col: int) -> NodeRef:
    return NodeRef(NodeKind.TEMPORAL_BLOCK, frame, row, col)


def temporal_frame_children(spec: DecompositionSpec) -> list[list[int]]:
    """Child frame indices of every frame of the volume."""
    kids: list[list[int]] = [[] for _ in range(spec.gop_length)]
    bands = spec.temporal_bands
    # bands[0] is the lowest band, bands[1] the coarsest high band, ...
    for parent, child in zip(bands[:-1], bands[1:]):
        fan = child.count // parent.count
        for k in range(parent.count):
            kids[parent.start + k] = [child.start + fan * k + j for j in range(fan)]
    return kids


def _spatial_parent_map(spec: DecompositionSpec) -> np.ndarray:
    """Flat in-frame index of each pixel's spatial parent, -1 inside LL."""
    H, W, S = spec.height, spec.width, spec.spatial_levels
    rr, cc = np.mgrid[0:H, 0:W]
    parent = np.full((H, W), -1, dtype=np.int64)
    if S == 0:
        return parent.ravel()
    h, w = H >> S, W >> S
    # coarsest detail bands hang off the LL group members b, c, d
    top, left = rr < h, cc < w
    for sel, dr, dc, roff, coff in (
        (top & (cc >= w) & (cc < 2 * w), 0, 1, 0, w),  # LH_S -> b
        ((rr >= h) & (rr < 2 * h) & left, 1, 0, h, 0),  # HL_S -> c
        ((rr >= h) & (rr < 2 * h) & (cc >= w) & (cc < 2 * w), 1, 1, h, w),  # HH_S -> d
    ):
        pr = (rr[sel] - roff) // 2 * 2 + dr
        pc = (cc[sel] - coff) // 2 * 2 + dc
        parent[sel] = pr * W + pc
    finer = ~((rr < 2 * h) & (cc < 2 * w))
    parent[finer] = (rr[finer] // 2) * W + cc[finer] // 2
    return parent.ravel()


@dataclass(frozen=True)
class TreeTopology:
    id: TreeKind
    spec: DecompositionSpec

    def __post_init__(self):
        object.__setattr__(self, "id", TreeKind(self.id))
        spec = self.spec
        for name, v in (("width", spec.width), ("height", spec.height)):
            if (v >> spec.spatial_levels) % 2 or v % (1 << spec.spatial_levels):
                raise InvalidDimensions(
                    f"{name} {v}: coarsest LL side must be even for 2x2 root groups")

    # ----------------------------------------------------------- flat arrays
    @property
    def size(self) -> int:
        G, H, W = self.spec.shape
        return G * H * W

    def flat(self, frame: int, row: int, col: int) -> int:
        return (frame * self.spec.height + row) * self.spec.width + col

    def unflat(self, idx: int) -> tuple[int, int, int]:
        H, W = self.spec.height, self.spec.width
        f, rem = divmod(int(idx), H * W)
        return (f, *divmod(rem, W))

    @cached_property
    def _ll_shape(self) -> tuple[int, int]:
        S = self.spec.spatial_levels
        return self.spec.height >> S, self.spec.width >> S

    @cached_property
    def parent(self) -> np.ndarray:
        spec = self.spec
        G, H, W = spec.shape
        hw = H * W
        sp = _spatial_parent_map(spec)
        tkids = temporal_frame_children(spec)
        tparent = np.full(G, -1, dtype=np.int64)
        for f, kids in enumerate(tkids):
            tparent[kids] = f
        h, w = self._ll_shape
        rr, cc = np.mgrid[0:H, 0:W]
        in_ll = ((rr < h) & (cc < w)).ravel()
        parent = np.empty((G, hw), dtype=np.int64)
        if self.id == TreeKind.EWSPB:
            # a-position of the group each LL pixel belongs to
            group_a = ((rr // 2 * 2) * W + cc // 2 * 2).ravel()
            for f in range(G):
                row = np.where(sp >= 0, sp + f * hw, -1)
                pf = tparent[f]
                if pf >= 0:
                    row[in_ll] = group_a[in_ll] + pf * hw
                parent[f] = row
        else:
            own = np.arange(hw)
            for f in range(G):
                pf = tparent[f]
                if pf >= 0:
                    parent[f] = own + pf * hw
                else:
                    parent[f] = np.where(sp >= 0, sp + f * hw, -1)
        return parent.ravel()

    @cached_property
    def roots(self) -> np.ndarray:
        """Flat indices of the roots: per lowest frame, LL groups raster, a b c d."""
        spec = self.spec
        h, w = self._ll_shape
        out = []
        for f in range(spec.temporal_bands[0].count):
            for gr in range(0, h, 2):
                for gc in range(0, w, 2):
                    for dr, dc in ((0, 0), (0, 1), (1, 0), (1, 1)):
                        out.append(self.flat(f, gr + dr, gc + dc))
        return np.asarray(out, dtype=np.int64)

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        parent = self.parent
        nonroot = np.flatnonzero(parent >= 0)
        # stable sort by parent keeps children in flat (frame, row, col) order
        order = np.argsort(parent[nonroot], kind="stable")
        child_idx = nonroot[order]
        counts = np.bincount(parent[nonroot], minlength=self.size)
        child_ptr = np.zeros(self.size + 1, dtype=np.int64)
        np.cumsum(counts, out=child_ptr[1:])
        return child_ptr, child_idx

    @property
    def child_ptr(self) -> np.ndarray:
        return self._csr[0]

    @property
    def child_idx(self) -> np.ndarray:
        return self._csr[1]

    def children_flat(self, idx: int) -> np.ndarray:
        ptr = self.child_ptr
        return self.child_idx[ptr[idx] : ptr[idx + 1]]

    @cached_property
    def has_children(self) -> np.ndarray:
        return np.diff(self.child_ptr) > 0

    @cached_property
    def has_grandchildren(self) -> np.ndarray:
        """True where L(node) = descendants minus offspring is non-empty."""
        hc = self.has_children
        out = np.zeros(self.size, dtype=bool)
        parents = np.flatnonzero(hc)
        kid_has = hc[self.child_idx].astype(np.int64)
        counts = np.add.reduceat(kid_has, self.child_ptr[parents]) if len(parents) else []
        out[parents] = np.asarray(counts) > 0
        return out

    @cached_property
    def block_node(self) -> np.ndarray:
        """True for coefficients whose offspring are temporal 2x2 blocks."""
        out = np.zeros(self.size, dtype=bool)
        if self.id != TreeKind.EWSPB:
            return out
        G, H, W = self.spec.shape
        h, w = self._ll_shape
        view = out.reshape(G, H, W)
        view[:, 0:h:2, 0:w:2] = True
        return out & self.has_children

    @cached_property
    def depth(self) -> np.ndarray:
        depth = np.full(self.size, -1, dtype=np.int64)
        frontier = self.roots
        d = 0
        while len(frontier):
            depth[frontier] = d
            frontier = self.gather_children(frontier)
            d += 1
        return depth

    def gather_children(self, nodes: np.ndarray) -> np.ndarray:
        """Concatenated child lists of ``nodes``, in order."""
        ptr = self.child_ptr
        starts, ends = ptr[nodes], ptr[nodes + 1]
        counts = ends - starts
        total = int(counts.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64)
        offs = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
        return self.child_idx[np.arange(total) + offs]

    @cached_property
    def reduction_plan(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Per depth (deepest first): parents, their concatenated children, segment starts."""
        depth = self.depth
        plan = []
        hc = self.has_children
        for d in range(int(depth.max()), -1, -1):
            parents = np.flatnonzero((depth == d) & hc)
            if not len(parents):
                continue
            kids = self.gather_children(parents)
            counts = self.child_ptr[parents + 1] - self.child_ptr[parents]
            starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
            plan.append((parents, kids, starts))
        return plan

    def set_maxima(self, magnitudes: np.ndarray):
        """Max magnitude over offspring O, descendants D and L = D \\ O for every node."""
        mag = np.asarray(magnitudes, dtype=np.float64).ravel()
        omax = np.zeros(self.size)
        dmax = np.zeros(self.size)
        lmax = np.zeros(self.size)
        for parents, kids, starts in self.reduction_plan:
            omax[parents] = np.maximum.reduceat(mag[kids], starts)
            lmax[parents] = np.maximum.reduceat(dmax[kids], starts)
            dmax[parents] = np.maximum(omax[parents], lmax[parents])
        return omax, dmax, lmax

    # ------------------------------------------------------- NodeRef view
    def root_refs(self) -> list[NodeRef]:
        return [coeff(*self.unflat(i)) for i in self.roots]

    def _in_ll(self, row: int, col: int) -> bool:
        h, w = self._ll_shape
        return row < h and col < w

    def spatial_children(self, node: NodeRef) -> list[NodeRef]:
        """SPIHT offspring of a coefficient inside its own frame."""
        if node.kind != NodeKind.SPATIAL_COEFF:
            raise ValueError("spatial_children takes a coefficient")
        W = self.spec.width
        sp = _spatial_parent_cached(self.spec)
        # offspring always form one 2x2 block; find it from the parent map
        hits = np.flatnonzero(sp == node.row * W + node.col)
        return [coeff(node.frame, *divmod(int(k), W)) for k in hits]

    def temporal_child_blocks(self, node: NodeRef) -> list[NodeRef]:
        """Co-located LL blocks in the temporal child frames."""
        r, c = node.row - node.row % 2, node.col - node.col % 2
        if not self._in_ll(node.row, node.col) or (
            node.kind == NodeKind.SPATIAL_COEFF and (node.row % 2 or node.col % 2)
        ):
            return []
        kids = temporal_frame_children(self.spec)[node.frame]
        return [block(f, r, c) for f in kids]

    @staticmethod
    def split_block(blk: NodeRef) -> tuple[NodeRef, tuple[NodeRef, NodeRef, NodeRef]]:
        if blk.kind != NodeKind.TEMPORAL_BLOCK:
            raise ValueError("split_block takes a temporal block")
        f, r, c = blk.frame, blk.row, blk.col
        return coeff(f, r, c), (coeff(f, r, c + 1), coeff(f, r + 1, c), coeff(f, r + 1, c + 1))

    def asym_children(self, node: NodeRef) -> list[NodeRef]:
        kids = []
        if node.frame < self.spec.temporal_bands[0].count:
            kids += self.spatial_children(node)
        kids += [coeff(f, node.row, node.col)
                 for f in temporal_frame_children(self.spec)[node.frame]]
        return kids

    def children(self, node: NodeRef) -> list[NodeRef]:
        """Coefficient-level offspring in this topology (blocks expanded)."""
        idx = self.flat(node.frame, node.row, node.col)
        return [coeff(*self.unflat(k)) for k in self.children_flat(idx)]


@lru_cache(maxsize=32)
def _spatial_parent_cached(spec: DecompositionSpec) -> np.ndarray:
    return _spatial_parent_map(spec)


@lru_cache(maxsize=16)
def get_topology(kind: TreeKind | int | str, spec: DecompositionSpec) -> TreeTopology:
    if isinstance(kind, str):
        kind = {"ewspb": TreeKind.EWSPB, "asym": TreeKind.ASYM3D,
                "asym3d": TreeKind.ASYM3D}[kind.lower()]
    return TreeTopology(TreeKind(kind), spec)
