"""Lifting wavelet transforms and the t+2D decomposition of a GOP.

Lifting (whole-sample symmetric extension at both ends):

    predict:  d[n] += c * (s[n] + s[n+1])      with s[L] == s[L-1]
    update:   s[n] += c * (d[n-1] + d[n])      with d[-1] == d[0]

followed by ``s *= low_gain`` and ``d *= high_gain``.  Two normalization
conventions exist, identified by a small integer tag carried in stream headers:

* ``NORM_JPEG2000`` (default): analysis low-pass DC gain 1, high-pass Nyquist
  gain 2.  9/7 is scaled by (1/K, K).
* ``NORM_UNSCALED``: the bare lifting steps, no 9/7 scaling.

LeGall 5/3 has unit gains in both, giving the synthesis low-pass {1/2, 1, 1/2}.

Coefficient layout inside a GOP volume ``(frame, row, col)``:

* frame axis, Mallat order: the lowest temporal band first, then the high
  band of the coarsest temporal level, down to the level-1 high band.
* each frame, Mallat order: ``LL<S>`` top-left, then for every level ``s``
  ``LH<s>`` (top-right, horizontal detail), ``HL<s>`` (bottom-left) and
  ``HH<s>`` (bottom-right).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import InvalidDimensions, InvalidLength


class FilterId(enum.IntEnum):
    LAZY = 0
    LEGALL53 = 1
    CDF97 = 2


_K97 = 1.230174104914001


@dataclass(frozen=True)
class FilterBank:
    id: FilterId
    # (is_predict, coefficient) in analysis order
    steps: tuple[tuple[bool, float], ...]
    low_gain: float = 1.0
    high_gain: float = 1.0


FILTERS: dict[FilterId, FilterBank] = {
    FilterId.LAZY: FilterBank(FilterId.LAZY, ()),
    FilterId.LEGALL53: FilterBank(FilterId.LEGALL53, ((True, -0.5), (False, 0.25))),
    FilterId.CDF97: FilterBank(
        FilterId.CDF97,
        (
            (True, -1.586134342059924),
            (False, -0.052980118572961),
            (True, 0.882911075530934),
            (False, 0.443506852043971),
        ),
        low_gain=1.0 / _K97,
        high_gain=_K97,
    ),
}

NORM_JPEG2000 = 1
NORM_UNSCALED = 2
NORMALIZATIONS = (NORM_JPEG2000, NORM_UNSCALED)


def get_filter(filt: FilterBank | FilterId | int | str,
               normalization: int = NORM_JPEG2000) -> FilterBank:
    if isinstance(filt, FilterBank):
        return filt
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization tag {normalization}")
    if normalization == NORM_UNSCALED:
        bank = get_filter(filt)
        return FilterBank(bank.id, bank.steps)
    if isinstance(filt, str):
        key = filt.strip().lower().replace("/", "")
        aliases = {"lazy": FilterId.LAZY, "53": FilterId.LEGALL53,
                   "legall53": FilterId.LEGALL53, "97": FilterId.CDF97,
                   "cdf97": FilterId.CDF97}
        if key not in aliases:
            raise ValueError(f"unknown filter {filt!r}")
        return FILTERS[aliases[key]]
    return FILTERS[FilterId(filt)]


def _analyze(x: np.ndarray, bank: FilterBank, axis: int = 0):
    """Split ``x`` along ``axis`` into (low, high) halves."""
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, 0)
    n = x.shape[0]
    if n < 2 or n % 2:
        raise InvalidLength(f"lifting needs an even length >= 2, got {n}")
    s = x[0::2].copy()
    d = x[1::2].copy()
    for is_predict, c in bank.steps:
        if is_predict:
            d += c * (s + np.concatenate((s[1:], s[-1:])))
        else:
            s += c * (np.concatenate((d[:1], d[:-1])) + d)
    if bank.low_gain != 1.0:
        s *= bank.low_gain
    if bank.high_gain != 1.0:
        d *= bank.high_gain
    return np.moveaxis(s, 0, axis), np.moveaxis(d, 0, axis)


def _synthesize(low: np.ndarray, high: np.ndarray, bank: FilterBank, axis: int = 0):
    s = np.moveaxis(np.array(low, dtype=np.float64), axis, 0)
    d = np.moveaxis(np.array(high, dtype=np.float64), axis, 0)
    if s.shape != d.shape or s.shape[0] < 1:
        raise InvalidLength(f"band shapes differ or are empty: {s.shape} vs {d.shape}")
    if bank.low_gain != 1.0:
        s /= bank.low_gain
    if bank.high_gain != 1.0:
        d /= bank.high_gain
    for is_predict, c in reversed(bank.steps):
        if is_predict:
            d -= c * (s + np.concatenate((s[1:], s[-1:])))
        else:
            s -= c * (np.concatenate((d[:1], d[:-1])) + d)
    out = np.empty((2 * s.shape[0],) + s.shape[1:])
    out[0::2] = s
    out[1::2] = d
    return np.moveaxis(out, 0, axis)


def forward_1d(signal, filt) -> tuple[np.ndarray, np.ndarray]:
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise InvalidLength("forward_1d expects a 1-D signal")
    return _analyze(signal, get_filter(filt))


def inverse_1d(low, high, filt) -> np.ndarray:
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    if low.ndim != 1 or high.ndim != 1 or len(low) != len(high) or len(low) < 1:
        raise InvalidLength(f"mismatched band lengths {low.shape} / {high.shape}")
    return _synthesize(low, high, get_filter(filt))


class SubbandId(NamedTuple):
    temporal: str  # e.g. "LLLL", "LLH", "H"
    spatial: str  # e.g. "LL3", "HL1"
    frame: int = 0  # index within the temporal band


class TemporalBand(NamedTuple):
    label: str
    level: int  # 0 for the lowest band
    start: int  # first frame in the volume
    count: int

    def row_name(self, k: int) -> str:
        return self.label if self.count == 1 else f"{self.label}_{k + 1}"


class SpatialBand(NamedTuple):
    label: str
    level: int
    rows: slice
    cols: slice


@dataclass(frozen=True)
class DecompositionSpec:
    temporal_levels: int
    spatial_levels: int
    temporal_filter: FilterId
    spatial_filter: FilterId
    gop_length: int
    width: int
    height: int
    normalization: int = NORM_JPEG2000

    def __post_init__(self):
        object.__setattr__(self, "temporal_filter", get_filter(self.temporal_filter).id)
        object.__setattr__(self, "spatial_filter", get_filter(self.spatial_filter).id)
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization tag {self.normalization}")
        tl, sl = self.temporal_levels, self.spatial_levels
        if tl < 0 or sl < 0:
            raise InvalidDimensions("decomposition levels must be >= 0")
        g = self.gop_length
        if g < 1 or g & (g - 1) or g < (1 << tl):
            raise InvalidDimensions(
                f"GOP length {g} must be a power of two >= 2**{tl}")
        for name, v in (("width", self.width), ("height", self.height)):
            if v < 1 or v % (1 << sl):
                raise InvalidDimensions(f"{name} {v} not divisible by 2**{sl}")

    @property
    def filters(self) -> tuple[FilterBank, FilterBank]:
        """(temporal, spatial) filter banks under this spec's normalization."""
        return (get_filter(self.temporal_filter, self.normalization),
                get_filter(self.spatial_filter, self.normalization))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.gop_length, self.height, self.width)

    @cached_property
    def temporal_bands(self) -> tuple[TemporalBand, ...]:
        tl = self.temporal_levels
        m = self.gop_length >> tl
        bands = [TemporalBand("L" * tl if tl else "F", 0, 0, m)]
        start = m
        for level in range(tl, 0, -1):
            count = self.gop_length >> level
            bands.append(TemporalBand("L" * (level - 1) + "H", level, start, count))
            start += count
        return tuple(bands)

    @cached_property
    def spatial_bands(self) -> tuple[SpatialBand, ...]:
        sl = self.spatial_levels
        h, w = self.height >> sl, self.width >> sl
        bands = [SpatialBand(f"LL{sl}", sl, slice(0, h), slice(0, w))]
        for level in range(sl, 0, -1):
            h, w = self.height >> level, self.width >> level
            bands += [
                SpatialBand(f"LH{level}", level, slice(0, h), slice(w, 2 * w)),
                SpatialBand(f"HL{level}", level, slice(h, 2 * h), slice(0, w)),
                SpatialBand(f"HH{level}", level, slice(h, 2 * h), slice(w, 2 * w)),
            ]
        return tuple(bands)

    def subbands(self) -> list[SubbandId]:
        """All subbands in table order: temporal rows outer, spatial columns inner."""
        return [SubbandId(tb.label, sb.label, k)
                for tb in self.temporal_bands for k in range(tb.count)
                for sb in self.spatial_bands]

    def temporal_band(self, label: str) -> TemporalBand:
        for tb in self.temporal_bands:
            if tb.label == label:
                return tb
        raise KeyError(label)

    def spatial_band(self, label: str) -> SpatialBand:
        for sb in self.spatial_bands:
            if sb.label == label:
                return sb
        raise KeyError(label)

    def region(self, sub: SubbandId) -> tuple[int, slice, slice]:
        """(frame index, row slice, col slice) of a subband in the volume."""
        tb = self.temporal_band(sub.temporal)
        if not 0 <= sub.frame < tb.count:
            raise KeyError(sub)
        sb = self.spatial_band(sub.spatial)
        return tb.start + sub.frame, sb.rows, sb.cols

    def subband_at(self, frame: int, row: int, col: int) -> SubbandId:
        for tb in self.temporal_bands:
            if tb.start <= frame < tb.start + tb.count:
                break
        else:
            raise IndexError(frame)
        for sb in self.spatial_bands:
            if sb.rows.start <= row < sb.rows.stop and sb.cols.start <= col < sb.cols.stop:
                return SubbandId(tb.label, sb.label, frame - tb.start)
        raise IndexError((row, col))

    def band_index_maps(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-frame temporal row index and per-pixel spatial column index.

        Row ``i`` is the ``i``-th frame (table rows are frames); the spatial map
        gives the position of each pixel's band in ``spatial_bands``.
        """
        smap = np.empty((self.height, self.width), dtype=np.int32)
        for j, sb in enumerate(self.spatial_bands):
            smap[sb.rows, sb.cols] = j
        return np.arange(self.gop_length), smap


@dataclass
class CoeffVolume:
    samples: np.ndarray
    spec: DecompositionSpec

    def __post_init__(self):
        if self.samples.shape != self.spec.shape:
            raise InvalidDimensions(
                f"samples {self.samples.shape} do not match spec {self.spec.shape}")

    def subband(self, sub: SubbandId) -> np.ndarray:
        f, rows, cols = self.spec.region(sub)
        return self.samples[f, rows, cols]

    def layout(self, frame: int, row: int, col: int) -> SubbandId:
        return self.spec.subband_at(frame, row, col)

    def copy(self) -> "CoeffVolume":
        return CoeffVolume(self.samples.copy(), self.spec)


def forward_gop(gop, spec: DecompositionSpec) -> CoeffVolume:
    x = np.array(gop, dtype=np.float64)
    if x.shape != spec.shape:
        raise InvalidDimensions(f"GOP shape {x.shape} != expected {spec.shape}")
    tf, sf = spec.filters
    n = spec.gop_length
    for _ in range(spec.temporal_levels):
        lo, hi = _analyze(x[:n], tf, axis=0)
        x[: n // 2], x[n // 2 : n] = lo, hi
        n //= 2
    h, w = spec.height, spec.width
    for _ in range(spec.spatial_levels):
        lo, hi = _analyze(x[:, :h, :w], sf, axis=2)
        blk = np.concatenate((lo, hi), axis=2)
        lo, hi = _analyze(blk, sf, axis=1)
        x[:, :h, :w] = np.concatenate((lo, hi), axis=1)
        h //= 2
        w //= 2
    return CoeffVolume(x, spec)


def inverse_gop(coeffs: CoeffVolume) -> np.ndarray:
    spec = coeffs.spec
    x = np.array(coeffs.samples, dtype=np.float64)
    if x.shape != spec.shape:
        raise InvalidDimensions(f"volume shape {x.shape} != expected {spec.shape}")
    tf, sf = spec.filters
    for level in range(spec.spatial_levels, 0, -1):
        h, w = spec.height >> (level - 1), spec.width >> (level - 1)
        blk = x[:, :h, :w]
        blk = _synthesize(blk[:, : h // 2], blk[:, h // 2 :], sf, axis=1)
        x[:, :h, :w] = _synthesize(blk[:, :, : w // 2], blk[:, :, w // 2 :], sf, axis=2)
    for level in range(spec.temporal_levels, 0, -1):
        n = spec.gop_length >> (level - 1)
        x[:n] = _synthesize(x[: n // 2], x[n // 2 : n], tf, axis=0)
    return x
