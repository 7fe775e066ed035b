"""Bitplane set-partitioning coder over a tree topology.

The encoder and decoder run the same list-driven state machine (LIP, LIS,
LSP as in SPIHT); the decoder reads every decision where the encoder wrote
it.  Per pass ``i`` with threshold ``T = 2**(n - i)``:

1. LIP scan: one significance bit per entry, plus a sign bit (1 = negative)
   for newly significant ones, which move to the LSP.
2. LIS scan, in list order, with entries appended during the pass handled
   in the same pass.

   * ``TYPE_A`` (all descendants D): one bit for D.  If significant, nodes
     whose offspring are temporal 2x2 blocks first spend one bit on the
     blocks as a whole; an insignificant block group moves straight into the
     LIP.  Otherwise every offspring gets significance (+ sign) and goes to
     the LSP or LIP.  The entry then becomes ``TYPE_B`` at the tail, or is
     dropped when L is empty.
   * ``TYPE_B`` (descendants minus offspring, L): one bit.  If significant,
     every offspring that has descendants enters the LIS as ``TYPE_A``; for a
     block node this is the split into one temporal root and three spatial
     roots per child block.

3. Refinement: entries that entered the LSP in an earlier pass emit the bit
   of ``|c|`` at weight ``T``.

The decoder places a newly significant coefficient at ``1.5 T`` and moves it
by ``T / 2`` per refinement bit, so after pass ``i`` every coefficient is
within ``T_i`` of the original.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EmptyGop
from .tree import TreeTopology

TYPE_A = 0
TYPE_B = 1

# Real-valued coefficients never reach a zero threshold; stop below 2**-16.
MIN_EXPONENT = -16


@dataclass
class CoderState:
    lip: list[int] = field(default_factory=list)
    lis: list[tuple[int, int]] = field(default_factory=list)
    lsp: list[int] = field(default_factory=list)
    lsp_pass: list[int] = field(default_factory=list)
    n: int = 0
    i: int = 0

    @property
    def threshold(self) -> float:
        return math.ldexp(1.0, self.n - self.i)

    def snapshot(self) -> "CoderState":
        return CoderState(list(self.lip), list(self.lis), list(self.lsp),
                          list(self.lsp_pass), self.n, self.i)

    def lists(self):
        return self.lip, self.lis, self.lsp


@dataclass
class GopBits:
    """Coded payload of one GOP; ``exponent is None`` marks an all-zero GOP."""

    exponent: Optional[int]
    bits: np.ndarray  # uint8 0/1 values

    @property
    def empty(self) -> bool:
        return self.exponent is None

    def __len__(self) -> int:
        return len(self.bits)


def initial_threshold(coeffs) -> int:
    """Exponent n = floor(log2(max |c|)); pass i then uses T = 2**(n - i)."""
    samples = getattr(coeffs, "samples", coeffs)
    peak = float(np.max(np.abs(samples))) if np.size(samples) else 0.0
    if peak == 0.0:
        raise EmptyGop("all coefficients are zero")
    # frexp is exact: peak = m * 2**e with 0.5 <= m < 1
    return math.frexp(peak)[1] - 1


def significance(values, threshold: float) -> int:
    """1 if any magnitude in ``values`` reaches ``threshold``."""
    return int(np.any(np.abs(np.asarray(values, dtype=np.float64)) >= threshold))


def _initial_state(topology: TreeTopology, n: int) -> CoderState:
    roots = topology.roots.tolist()
    has_kids = topology.has_children
    lis = [(r, TYPE_A) for r in roots if has_kids[r]]
    return CoderState(lip=list(roots), lis=lis, n=n, i=0)


class _Plan:
    """Topology arrays converted to Python lists for the scalar loop."""

    __slots__ = ("ptr", "idx", "has_d", "has_l", "block")

    def __init__(self, topology: TreeTopology):
        self.ptr = topology.child_ptr.tolist()
        self.idx = topology.child_idx.tolist()
        self.has_d = topology.has_children.tolist()
        self.has_l = topology.has_grandchildren.tolist()
        self.block = topology.block_node.tolist()


_plans: dict[TreeTopology, _Plan] = {}


def _plan(topology: TreeTopology) -> _Plan:
    plan = _plans.get(topology)
    if plan is None:
        if len(_plans) > 8:
            _plans.clear()
        plan = _plans[topology] = _Plan(topology)
    return plan


PassHook = Callable[[CoderState, np.ndarray], None]


def encode_gop(coeffs, topology: TreeTopology, budget: Optional[int] = None, *,
               min_exponent: int = MIN_EXPONENT,
               on_pass: Optional[PassHook] = None) -> GopBits:
    """Encode a (weighted) coefficient volume into an embedded bit segment.

    ``budget`` caps the payload in bits; the result is the exact prefix an
    unbounded run would have produced.  ``on_pass`` receives the state and
    the encoder-side reconstruction after every completed pass.
    """
    samples = np.asarray(getattr(coeffs, "samples", coeffs), dtype=np.float64)
    if samples.shape != topology.spec.shape:
        raise ValueError(f"volume {samples.shape} does not match topology {topology.spec.shape}")
    try:
        n = initial_threshold(samples)
    except EmptyGop:
        return GopBits(None, np.zeros(0, dtype=np.uint8))
    if budget is None:
        budget = 1 << 62

    flat = samples.ravel()
    mag_arr = np.abs(flat)
    neg_arr = (flat < 0).astype(np.uint8)
    omax_arr, dmax_arr, lmax_arr = topology.set_maxima(mag_arr)
    mag, neg = mag_arr.tolist(), neg_arr.tolist()
    omax, dmax, lmax = omax_arr.tolist(), dmax_arr.tolist(), lmax_arr.tolist()
    plan = _plan(topology)
    ptr, idx, has_d, has_l, is_block = plan.ptr, plan.idx, plan.has_d, plan.has_l, plan.block

    state = _initial_state(topology, n)
    out = bytearray()
    rec = np.zeros_like(flat) if on_pass else None

    while n - state.i >= min_exponent and len(out) < budget:
        i = state.i
        T = math.ldexp(1.0, n - i)
        n_refine = len(state.lsp)

        # LIP scan
        if state.lip:
            lip = np.asarray(state.lip, dtype=np.int64)
            sig = mag_arr[lip] >= T
            nsig = int(sig.sum())
            chunk = np.zeros(len(lip) + nsig, dtype=np.uint8)
            pos = np.arange(len(lip)) + np.concatenate(([0], np.cumsum(sig)[:-1]))
            chunk[pos] = sig
            chunk[pos[sig] + 1] = neg_arr[lip[sig]]
            out += chunk.tobytes()
            if nsig:
                newly = lip[sig].tolist()
                state.lsp += newly
                state.lsp_pass += [i] * nsig
                state.lip = lip[~sig].tolist()

        # LIS scan
        lis = state.lis
        lip_l, lsp_l, lsp_pass = state.lip, state.lsp, state.lsp_pass
        k = 0
        while k < len(lis):
            if len(out) >= budget:
                break
            node, typ = lis[k]
            if typ == TYPE_A:
                if dmax[node] < T:
                    out.append(0)
                    k += 1
                    continue
                out.append(1)
                kids = idx[ptr[node] : ptr[node + 1]]
                if is_block[node] and omax[node] < T:
                    out.append(0)
                    lip_l += kids
                else:
                    if is_block[node]:
                        out.append(1)
                    for c in kids:
                        if mag[c] >= T:
                            out.append(1)
                            out.append(neg[c])
                            lsp_l.append(c)
                            lsp_pass.append(i)
                        else:
                            out.append(0)
                            lip_l.append(c)
                lis[k] = None
                if has_l[node]:
                    lis.append((node, TYPE_B))
            else:
                if lmax[node] < T:
                    out.append(0)
                    k += 1
                    continue
                out.append(1)
                lis[k] = None
                for c in idx[ptr[node] : ptr[node + 1]]:
                    if has_d[c]:
                        lis.append((c, TYPE_A))
            k += 1
        state.lis = [e for e in lis if e is not None]

        if len(out) >= budget:
            break

        # refinement
        if n_refine:
            ref = np.asarray(state.lsp[:n_refine], dtype=np.int64)
            bits = (np.floor(mag_arr[ref] / T).astype(np.int64) & 1).astype(np.uint8)
            out += bits.tobytes()

        state.i += 1
        if on_pass is not None:
            _reconstruct_encoder_side(rec, state, mag_arr, neg_arr, n)
            on_pass(state.snapshot(), rec.reshape(samples.shape).copy())

    bits = np.frombuffer(bytes(out[:budget]), dtype=np.uint8).copy()
    return GopBits(n, bits)


def _reconstruct_encoder_side(rec, state, mag_arr, neg_arr, n):
    """What the decoder holds after the completed passes (for mirror checks)."""
    rec[:] = 0.0
    if not state.lsp:
        return
    lsp = np.asarray(state.lsp, dtype=np.int64)
    entered = np.asarray(state.lsp_pass, dtype=np.int64)
    t_last = np.ldexp(1.0, n - (state.i - 1))
    t_in = np.ldexp(1.0, n - entered)
    # magnitude known to the precision of the last completed pass's threshold
    m = mag_arr[lsp]
    known = np.floor(m / t_last) * t_last
    # coefficients found in the last pass have not been refined yet
    value = known + t_last / 2
    value = np.where(entered == state.i - 1, 1.5 * t_in, value)
    rec[lsp] = np.where(neg_arr[lsp] == 1, -value, value)


class _Truncated(Exception):
    pass


def decode_gop(payload: GopBits, spec, topology: TreeTopology,
               budget: Optional[int] = None, *, min_exponent: int = MIN_EXPONENT,
               on_pass: Optional[PassHook] = None) -> np.ndarray:
    """Rebuild the (weighted) coefficient volume from a bit-segment prefix."""
    shape = spec.shape
    if payload.empty:
        return np.zeros(shape)
    n = payload.exponent
    bits = payload.bits if budget is None else payload.bits[: max(budget, 0)]
    src = bytes(bits)
    nbits = len(src)

    plan = _plan(topology)
    ptr, idx, has_d, has_l, is_block = plan.ptr, plan.idx, plan.has_d, plan.has_l, plan.block
    size = topology.size
    rec = np.zeros(size)
    state = _initial_state(topology, n)
    pos = 0

    try:
        while n - state.i >= min_exponent:
            i = state.i
            T = math.ldexp(1.0, n - i)
            half = 1.5 * T
            n_refine = len(state.lsp)

            # LIP scan
            keep = []
            lsp_l, lsp_pass = state.lsp, state.lsp_pass
            lip = state.lip
            try:
                for j, node in enumerate(lip):
                    if pos >= nbits:
                        raise _Truncated
                    if src[pos]:
                        if pos + 1 >= nbits:
                            raise _Truncated
                        rec[node] = -half if src[pos + 1] else half
                        lsp_l.append(node)
                        lsp_pass.append(i)
                        pos += 2
                    else:
                        keep.append(node)
                        pos += 1
            except _Truncated:
                state.lip = keep + lip[j:]
                raise
            state.lip = keep

            # LIS scan
            lis = state.lis
            lip_l = state.lip
            k = 0
            try:
                while k < len(lis):
                    node, typ = lis[k]
                    if pos >= nbits:
                        raise _Truncated
                    if typ == TYPE_A:
                        if not src[pos]:
                            pos += 1
                            k += 1
                            continue
                        p = pos + 1
                        kids = idx[ptr[node] : ptr[node + 1]]
                        if is_block[node]:
                            if p >= nbits:
                                raise _Truncated
                            blk = src[p]
                            p += 1
                        else:
                            blk = 1
                        if not blk:
                            lip_l += kids
                        else:
                            # read all offspring decisions before touching state
                            dec = []
                            for c in kids:
                                if p >= nbits:
                                    raise _Truncated
                                if src[p]:
                                    if p + 1 >= nbits:
                                        raise _Truncated
                                    dec.append((c, src[p + 1]))
                                    p += 2
                                else:
                                    dec.append((c, -1))
                                    p += 1
                            for c, s in dec:
                                if s < 0:
                                    lip_l.append(c)
                                else:
                                    rec[c] = -half if s else half
                                    lsp_l.append(c)
                                    lsp_pass.append(i)
                        pos = p
                        lis[k] = None
                        if has_l[node]:
                            lis.append((node, TYPE_B))
                    else:
                        if not src[pos]:
                            pos += 1
                            k += 1
                            continue
                        pos += 1
                        lis[k] = None
                        for c in idx[ptr[node] : ptr[node + 1]]:
                            if has_d[c]:
                                lis.append((c, TYPE_A))
                    k += 1
            finally:
                state.lis = [e for e in lis if e is not None]

            # refinement
            if n_refine:
                take = min(n_refine, nbits - pos)
                ref = np.asarray(state.lsp[:take], dtype=np.int64)
                b = np.frombuffer(src, dtype=np.uint8, count=take, offset=pos)
                step = np.where(b == 1, T / 2, -T / 2)
                rec[ref] += np.where(rec[ref] < 0, -step, step)
                pos += take
                if take < n_refine:
                    raise _Truncated

            state.i += 1
            if on_pass is not None:
                on_pass(state.snapshot(), rec.reshape(shape).copy())
    except _Truncated:
        pass
    return rec.reshape(shape)
