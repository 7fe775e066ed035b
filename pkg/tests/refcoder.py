"""Slow, readable set-partitioning encoder used as an oracle.

Offspring come from the NodeRef view of the topology (spatial children,
temporal child blocks split into coefficients, or the asymmetric chains),
and descendant sets are enumerated explicitly.  Offspring are visited in
(frame, row, col) order, the order the production coder uses.
"""
import math

import numpy as np

from ewspcodec.tree import NodeKind, TreeKind, TreeTopology, coeff


def offspring(topo, f, r, c):
    node = coeff(f, r, c)
    if topo.id == TreeKind.ASYM3D:
        kids = topo.asym_children(node)
    else:
        kids = list(topo.spatial_children(node))
        for blk in topo.temporal_child_blocks(node):
            a, rest = TreeTopology.split_block(blk)
            kids += [a, *rest]
    assert all(k.kind == NodeKind.SPATIAL_COEFF for k in kids)
    return sorted((k.frame, k.row, k.col) for k in kids)


class Sets:
    def __init__(self, topo):
        self.topo = topo
        self._off, self._desc = {}, {}

    def off(self, p):
        if p not in self._off:
            self._off[p] = offspring(self.topo, *p)
        return self._off[p]

    def desc(self, p):
        if p not in self._desc:
            out = []
            for k in self.off(p):
                out.append(k)
                out += self.desc(k)
            self._desc[p] = out
        return self._desc[p]

    def is_block(self, p):
        return self.topo.id == TreeKind.EWSPB and bool(self.topo.temporal_child_blocks(coeff(*p)))


def reference_encode(x, topo, min_exponent=-16):
    """Return (bits, per-pass list states) for volume ``x``."""
    sets = Sets(topo)
    mag = np.abs(x)
    n = math.frexp(float(mag.max()))[1] - 1
    roots = [tuple(topo.unflat(i)) for i in topo.roots]
    lip = list(roots)
    lis = [(p, "A") for p in roots if sets.off(p)]
    lsp = []
    bits, states = [], []
    i = 0
    while n - i >= min_exponent:
        T = 2.0 ** (n - i)
        old = len(lsp)
        keep = []
        for p in lip:
            s = mag[p] >= T
            bits.append(int(s))
            if s:
                bits.append(int(x[p] < 0))
                lsp.append(p)
            else:
                keep.append(p)
        lip = keep
        k = 0
        while k < len(lis):
            p, typ = lis[k]
            if typ == "A":
                sig = any(mag[d] >= T for d in sets.desc(p))
                bits.append(int(sig))
                if sig:
                    kids = sets.off(p)
                    if sets.is_block(p):
                        blk = any(mag[c] >= T for c in kids)
                        bits.append(int(blk))
                    else:
                        blk = True
                    for c in kids:
                        if not blk:
                            lip.append(c)
                            continue
                        s = mag[c] >= T
                        bits.append(int(s))
                        if s:
                            bits.append(int(x[c] < 0))
                            lsp.append(c)
                        else:
                            lip.append(c)
                    lis[k] = None
                    if len(sets.desc(p)) > len(kids):
                        lis.append((p, "B"))
            else:
                kids = sets.off(p)
                grand = [d for d in sets.desc(p) if d not in set(kids)]
                sig = any(mag[d] >= T for d in grand)
                bits.append(int(sig))
                if sig:
                    lis[k] = None
                    lis += [(c, "A") for c in kids if sets.off(c)]
            k += 1
        lis = [e for e in lis if e is not None]
        for p in lsp[:old]:
            bits.append(int(math.floor(mag[p] / T)) & 1)
        states.append((list(lip), list(lis), list(lsp)))
        i += 1
    return bits, states
