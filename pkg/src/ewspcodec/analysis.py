"""Diagnostics: weight-table calibration, subband energy statistics, zerotree
ratios per scan, and rate-distortion curves."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .codec import EncoderConfig, decode_stream, encode_clip
from .coder import initial_threshold
from .errors import EmptyGop, InvalidDimensions
from .tree import TreeTopology, temporal_frame_children
from .videoio import VideoClip, psnr
from .wavelet import NORMALIZATIONS, CoeffVolume, DecompositionSpec
from .weighting import WeightTable, build_weight_table


# -- weight tables -----------------------------------------------------------

@dataclass
class CalibrationReport:
    normalization: int
    scale: float  # global factor applied before comparing (1.0 when not fitted)
    within: float  # fraction of cells within tolerance
    max_rel_error: float
    rel_errors: np.ndarray  # rows x columns

    def worst_cells(self, table: WeightTable, count: int = 5) -> list[tuple[str, str, float]]:
        rows, cols = table.row_names(), table.column_names()
        flat = np.argsort(-self.rel_errors, axis=None)[:count]
        return [(rows[i], cols[j], float(self.rel_errors[i, j]))
                for i, j in zip(*np.unravel_index(flat, self.rel_errors.shape))]


def compare_weights(table: WeightTable, reference, tol: float = 0.05,
                    fit_scale: bool = False) -> CalibrationReport:
    """Relative deviation of ``table`` from a reference matrix of the same layout.

    With ``fit_scale`` a single global factor is fitted first (least squares
    in log space), which absorbs a constant normalization difference.
    """
    ref = np.asarray(reference, dtype=np.float64)
    ours = table.as_matrix()
    if ref.shape != ours.shape:
        raise InvalidDimensions(f"reference is {ref.shape}, table is {ours.shape}")
    scale = float(np.exp(np.mean(np.log(ref) - np.log(ours)))) if fit_scale else 1.0
    rel = np.abs(ours * scale - ref) / np.abs(ref)
    return CalibrationReport(table.convention, scale, float(np.mean(rel <= tol)),
                             float(rel.max()), rel)


def calibrate_weights(spec: DecompositionSpec, reference, tol: float = 0.05
                      ) -> list[CalibrationReport]:
    """Compare every normalization convention (raw and scale-fitted), best first."""
    reports = []
    for norm in NORMALIZATIONS:
        table = build_weight_table(replace(spec, normalization=norm))
        reports.append(compare_weights(table, reference, tol))
        reports.append(compare_weights(table, reference, tol, fit_scale=True))
    reports.sort(key=lambda r: (-r.within, r.max_rel_error))
    return reports


# -- subband energy ----------------------------------------------------------

@dataclass
class EnergyRow:
    band: str
    spatial: float  # mean square of the frame's spatial detail bands
    temporal: float  # mean square of its temporal child frames


def subband_energy_report(coeffs: CoeffVolume) -> list[EnergyRow]:
    """Mean energy per frame that has temporal children, split spatial vs temporal.

    ``spatial`` is the mean square of the frame's spatial detail bands and
    ``temporal`` that of the temporal high frames one level finer that
    descend from it.
    """
    spec = coeffs.spec
    x = coeffs.samples
    ll = spec.spatial_bands[0]
    detail = np.ones((spec.height, spec.width), dtype=bool)
    detail[ll.rows, ll.cols] = False
    kids = temporal_frame_children(spec)
    rows = []
    for tb in spec.temporal_bands:
        for k in range(tb.count):
            f = tb.start + k
            if not kids[f]:
                continue
            spatial = float(np.mean(x[f][detail] ** 2)) if detail.any() else 0.0
            rows.append(EnergyRow(tb.row_name(k), spatial, float(np.mean(x[kids[f]] ** 2))))
    return rows


def temporal_spatial_ratio(coeffs: CoeffVolume) -> float:
    """Variance of the temporal high band over that of the spatial high band.

    The temporal high band is every coefficient of the temporal high frames;
    the spatial high band is the detail subbands of the lowest temporal
    frame(s).
    """
    spec = coeffs.spec
    if spec.temporal_levels == 0 or spec.spatial_levels == 0:
        raise InvalidDimensions("needs at least one temporal and one spatial level")
    x = coeffs.samples
    low = spec.temporal_bands[0]
    ll = spec.spatial_bands[0]
    mask = np.ones((spec.height, spec.width), dtype=bool)
    mask[ll.rows, ll.cols] = False
    denom = float(np.var(x[: low.count][:, mask]))
    num = float(np.var(x[low.count :]))
    if denom == 0:
        return 0.0 if num == 0 else math.inf
    return num / denom


def energy_csv(rows: Sequence[EnergyRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["band", "spatial", "temporal"])
    for r in rows:
        w.writerow([r.band, f"{r.spatial:.2f}", f"{r.temporal:.2f}"])
    return buf.getvalue()


# -- zerotrees ---------------------------------------------------------------

def scan_threshold(coeffs, scan: int) -> float:
    """Threshold of the 1-based ``scan``: T = 2**(n - (scan - 1))."""
    if scan < 1:
        raise ValueError("scan numbers start at 1")
    n = initial_threshold(coeffs)
    return math.ldexp(1.0, n - (scan - 1))


def zerotree_ratio(coeffs, topology: TreeTopology, scan: int, degree: int = 1,
                   nodes: str = "all") -> float:
    """Percentage of tree nodes that are degree-``degree`` zerotrees at a scan.

    A degree-1 zerotree has no significant descendant; a degree-2 zerotree
    has none beyond its offspring.  With ``nodes="all"`` every coefficient
    counts (a leaf is a trivial zerotree), so two topologies over the same
    volume share one denominator.  ``nodes="sets"`` restricts the count to
    set roots, the nodes with a non-empty descendant set.  An all-zero volume
    counts as 100%.
    """
    if degree not in (1, 2):
        raise ValueError("degree must be 1 or 2")
    if nodes not in ("all", "sets"):
        raise ValueError("nodes must be 'all' or 'sets'")
    samples = np.asarray(getattr(coeffs, "samples", coeffs), dtype=np.float64)
    if samples.size != topology.size:
        raise InvalidDimensions("coefficient volume does not match the topology")
    sets = topology.has_children
    total = topology.size if nodes == "all" else int(sets.sum())
    if total == 0:
        return 100.0
    try:
        T = scan_threshold(samples, scan)
    except EmptyGop:
        return 100.0
    _, dmax, lmax = topology.set_maxima(np.abs(samples).ravel())
    m = dmax if degree == 1 else lmax
    live = int(np.sum(m[sets] >= T))
    return 100.0 * (total - live) / total


def zerotree_table(coeffs, topologies: dict[str, TreeTopology], scans: Iterable[int] = range(1, 8),
                   degree: int = 1, nodes: str = "all") -> list[dict]:
    return [{"scan": s, **{name: zerotree_ratio(coeffs, topo, s, degree, nodes)
                           for name, topo in topologies.items()}}
            for s in scans]


# -- rate-distortion ---------------------------------------------------------

@dataclass
class RdPoint:
    kbps: float
    psnr_y: float
    psnr_u: float
    psnr_v: float


def rd_curve(clip: VideoClip, config: Optional[EncoderConfig], bitrates: Sequence[float],
             *, encode_once: bool = True) -> list[RdPoint]:
    """PSNR per component at each bitrate.

    With ``encode_once`` the clip is coded at the highest rate and the lower
    points are prefix decodes of that stream; the embedded format makes this
    identical to separate encodes.
    """
    config = config or EncoderConfig()
    rates = sorted(bitrates)
    points = []
    stream = encode_clip(clip, rates[-1], config) if encode_once and rates else None
    for k in rates:
        data = stream if stream is not None else encode_clip(clip, k, config)
        rec = decode_stream(data, k)
        points.append(RdPoint(k, psnr(clip.y, rec.y), psnr(clip.u, rec.u), psnr(clip.v, rec.v)))
    return points


def rd_csv(points: Sequence[RdPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kbps", "psnr_y", "psnr_u", "psnr_v"])
    for p in points:
        w.writerow([f"{p.kbps:g}", f"{p.psnr_y:.3f}", f"{p.psnr_u:.3f}", f"{p.psnr_v:.3f}"])
    return buf.getvalue()
