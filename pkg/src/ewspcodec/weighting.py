"""Per-subband energy weights.

A biorthogonal synthesis basis is not unit-norm, so a unit error in one
subband costs a different amount of reconstructed energy than a unit error in
another.  The weight of a subband is the L2 norm of the signal obtained by
inverse-transforming a single unit coefficient placed at the centre of that
subband; multiplying coefficients by their weight before bitplane coding puts
every bitplane on a common distortion scale.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SpecMismatch, SubbandTooSmall
from .wavelet import (
    CoeffVolume,
    DecompositionSpec,
    SubbandId,
    _synthesize,
)


def _axis_energy(n: int, levels: int, bank, pos: int) -> float:
    """Energy of the 1-D synthesis, from ``levels`` down to 1, of a unit impulse at ``pos``."""
    x = np.zeros(n)
    x[pos] = 1.0
    for level in range(levels, 0, -1):
        m = n >> (level - 1)
        x[:m] = _synthesize(x[: m // 2], x[m // 2 : m], bank)
    return float(np.dot(x, x))


def probe_position(sub: SubbandId, spec: DecompositionSpec) -> tuple[int, int, int]:
    frame, rows, cols = spec.region(sub)
    h, w = rows.stop - rows.start, cols.stop - cols.start
    if spec.spatial_levels and (h < 2 or w < 2):
        raise SubbandTooSmall(f"{sub} is {h}x{w}; need at least 2x2 for an interior probe")
    return frame, rows.start + h // 2, cols.start + w // 2


def basis_energy(sub: SubbandId, spec: DecompositionSpec) -> float:
    """Reconstructed energy of a unit coefficient at the centre of ``sub``.

    The t+2D transform is separable, so the impulse response is an outer
    product of three 1-D responses and its energy factorizes per axis.
    """
    f, r, c = probe_position(sub, spec)
    tf, sf = spec.filters
    # a detail band of level s enters spatial synthesis at level s, not at the top
    s = spec.spatial_band(sub.spatial).level
    e_t = _axis_energy(spec.gop_length, spec.temporal_levels, tf, f)
    e_v = _axis_energy(spec.height, s, sf, r)
    e_h = _axis_energy(spec.width, s, sf, c)
    # e_v * e_h is commutative in IEEE arithmetic, so LH and HL come out bit-identical
    return e_t * (e_v * e_h)


@dataclass(frozen=True)
class WeightTable:
    entries: dict[SubbandId, float]
    spec: DecompositionSpec
    _frame_matrix: np.ndarray = field(default=None, repr=False, compare=False)

    def __getitem__(self, sub: SubbandId) -> float:
        return self.entries[sub]

    @property
    def convention(self) -> int:
        return self.spec.normalization

    def row_names(self) -> list[str]:
        return [tb.row_name(k) for tb in self.spec.temporal_bands for k in range(tb.count)]

    def column_names(self) -> list[str]:
        return [sb.label for sb in self.spec.spatial_bands]

    def as_matrix(self) -> np.ndarray:
        """Weights as (frames, spatial bands), rows in volume frame order."""
        if self._frame_matrix is None:
            spec = self.spec
            mat = np.empty((spec.gop_length, len(spec.spatial_bands)))
            for tb in spec.temporal_bands:
                for k in range(tb.count):
                    for j, sb in enumerate(spec.spatial_bands):
                        mat[tb.start + k, j] = self.entries[SubbandId(tb.label, sb.label, k)]
            object.__setattr__(self, "_frame_matrix", mat)
        return self._frame_matrix

    def field(self) -> np.ndarray:
        """Per-sample weight volume shaped like the coefficient volume."""
        _, smap = self.spec.band_index_maps()
        return self.as_matrix()[:, smap]

    def to_csv(self, digits: int = 2) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["band"] + self.column_names())
        for name, row in zip(self.row_names(), self.as_matrix()):
            writer.writerow([name] + [f"{v:.{digits}f}" for v in row])
        return buf.getvalue()


def build_weight_table(spec: DecompositionSpec) -> WeightTable:
    entries = {sub: math.sqrt(basis_energy(sub, spec)) for sub in spec.subbands()}
    return WeightTable(entries, spec)


def unit_weight_table(spec: DecompositionSpec) -> WeightTable:
    return WeightTable({sub: 1.0 for sub in spec.subbands()}, spec)


def _check(coeffs: CoeffVolume, table: WeightTable):
    if coeffs.spec != table.spec:
        raise SpecMismatch("weight table was built for a different decomposition")


def apply_weights(coeffs: CoeffVolume, table: WeightTable) -> CoeffVolume:
    _check(coeffs, table)
    return CoeffVolume(coeffs.samples * table.field(), coeffs.spec)


def remove_weights(coeffs: CoeffVolume, table: WeightTable) -> CoeffVolume:
    _check(coeffs, table)
    return CoeffVolume(coeffs.samples / table.field(), coeffs.spec)
