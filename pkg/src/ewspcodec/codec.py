"""Clip-level encoder and decoder.

Each plane is level-shifted by -128, cut into GOPs (the last one padded by
repeating the final frame), padded spatially by edge replication to a
multiple of ``2**(spatial_levels + 1)`` so the coarsest ``LL`` band has even
sides, transformed, optionally weighted, and bitplane coded.  A target rate
fixes a bit budget per GOP, shared between Y, U and V by ``rate_split`` and
net of the per-segment header.  Because every segment is embedded, decoding
with a lower rate than the one used for encoding reads a prefix of each
segment, which is exactly what encoding at the lower rate would produce.

``EWSP_THREADS`` (default 1) sets the number of worker processes.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .bitstream import (
    HEADER_SIZE,
    SEGMENT_HEADER_SIZE,
    GopSegment,
    StreamHeader,
    iter_segments,
    read_header,
    write_header,
    write_segment,
)
from .coder import MIN_EXPONENT, GopBits, decode_gop, encode_gop
from .errors import CorruptStream, EmptyGop, InvalidDimensions
from .tree import TreeKind, get_topology
from .videoio import VideoClip, to_samples
from .wavelet import (
    NORM_JPEG2000,
    CoeffVolume,
    DecompositionSpec,
    FilterId,
    forward_gop,
    get_filter,
    inverse_gop,
)
from .weighting import build_weight_table, unit_weight_table

LEVEL_SHIFT = 128.0
SEGMENT_HEADER_BITS = 8 * SEGMENT_HEADER_SIZE


@dataclass(frozen=True)
class EncoderConfig:
    gop_length: int = 16
    temporal_levels: int = 4
    spatial_levels: int = 3
    temporal_filter: FilterId | str = FilterId.LEGALL53
    spatial_filter: FilterId | str = FilterId.CDF97
    normalization: int = NORM_JPEG2000
    tree: TreeKind | str = TreeKind.EWSPB
    weighted: bool = True
    rate_split: tuple[int, int, int] = (4, 1, 1)
    fps: float | Fraction = 30
    min_exponent: int = MIN_EXPONENT

    def __post_init__(self):
        object.__setattr__(self, "temporal_filter", get_filter(self.temporal_filter).id)
        object.__setattr__(self, "spatial_filter", get_filter(self.spatial_filter).id)
        if isinstance(self.tree, str):
            object.__setattr__(self, "tree", get_topology_kind(self.tree))
        if len(self.rate_split) != 3 or min(self.rate_split) < 0 or sum(self.rate_split) == 0:
            raise ValueError("rate_split needs three non-negative shares, not all zero")
        if not -128 <= self.min_exponent <= 0:
            raise ValueError("min_exponent must be in [-128, 0]")
        if float(self.fps) <= 0:
            raise ValueError("fps must be positive")
        # validates gop length against the temporal depth
        DecompositionSpec(self.temporal_levels, self.spatial_levels, self.temporal_filter,
                          self.spatial_filter, self.gop_length, 1 << self.spatial_levels,
                          1 << self.spatial_levels, self.normalization)

    @property
    def fps_fraction(self) -> Fraction:
        return Fraction(self.fps).limit_denominator(1000)


def get_topology_kind(name: str) -> TreeKind:
    try:
        return {"ewspb": TreeKind.EWSPB, "asym": TreeKind.ASYM3D,
                "asym3d": TreeKind.ASYM3D}[name.lower()]
    except KeyError:
        raise ValueError(f"unknown tree {name!r}") from None


def padded_size(n: int, spatial_levels: int) -> int:
    m = 1 << (spatial_levels + 1)
    return -(-n // m) * m


def plane_spec(header: StreamHeader, component: int) -> DecompositionSpec:
    w, h = header.width, header.height
    if component:
        w, h = (w + 1) // 2, (h + 1) // 2
    sl = header.spatial_levels
    return DecompositionSpec(header.temporal_levels, sl, header.temporal_filter,
                             header.spatial_filter, header.gop_length,
                             padded_size(w, sl), padded_size(h, sl), header.normalization)


def gop_budgets(header: StreamHeader, kbps: Optional[float]) -> list[Optional[int]]:
    """Payload bit budget of each component segment in one GOP."""
    comps = len(header.components)
    if kbps is None:
        return [None] * comps
    total = kbps * 1000.0 * header.gop_length * header.fps_den / header.fps_num
    split = header.rate_split[:comps]
    share = sum(split)
    return [max(0, int(math.floor(total * s / share)) - SEGMENT_HEADER_BITS) if s else 0
            for s in split]


def _gop_frames(plane: np.ndarray, g: int, gop: int) -> np.ndarray:
    frames = plane[g * gop : (g + 1) * gop]
    if len(frames) < gop:
        pad = np.repeat(frames[-1:], gop - len(frames), axis=0)
        frames = np.concatenate([frames, pad])
    return frames


def _pad_spatial(frames: np.ndarray, spec: DecompositionSpec) -> np.ndarray:
    _, h, w = frames.shape
    return np.pad(frames, ((0, 0), (0, spec.height - h), (0, spec.width - w)), mode="edge")


def _weights(spec: DecompositionSpec, weighted: bool):
    return build_weight_table(spec) if weighted else unit_weight_table(spec)


_weight_cache: dict = {}


def _weight_field(spec: DecompositionSpec, weighted: bool) -> np.ndarray:
    key = (spec, weighted)
    if key not in _weight_cache:
        _weight_cache[key] = _weights(spec, weighted).field()
    return _weight_cache[key]


def analyze_plane_gop(frames: np.ndarray, spec: DecompositionSpec,
                      weighted: bool = True) -> CoeffVolume:
    """Level-shift, pad, transform and weight one GOP of one plane."""
    x = _pad_spatial(np.asarray(frames, dtype=np.float64) - LEVEL_SHIFT, spec)
    coeffs = forward_gop(x, spec)
    return CoeffVolume(coeffs.samples * _weight_field(spec, weighted), spec)


def synthesize_plane_gop(samples: np.ndarray, spec: DecompositionSpec, weighted: bool,
                         height: int, width: int) -> np.ndarray:
    x = inverse_gop(CoeffVolume(samples / _weight_field(spec, weighted), spec))
    return x[:, :height, :width] + LEVEL_SHIFT


def _encode_job(args) -> GopBits:
    frames, spec, tree, weighted, budget, min_exp = args
    coeffs = analyze_plane_gop(frames, spec, weighted)
    try:
        return encode_gop(coeffs.samples, get_topology(tree, spec), budget,
                          min_exponent=min_exp)
    except EmptyGop:
        return GopBits(None, np.zeros(0, dtype=np.uint8))


def _decode_job(args) -> np.ndarray:
    payload, spec, tree, weighted, budget, min_exp, h, w = args
    rec = decode_gop(payload, spec, get_topology(tree, spec), budget, min_exponent=min_exp)
    return synthesize_plane_gop(rec, spec, weighted, h, w)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("EWSP_THREADS", "1")))
    except ValueError:
        return 1


def _run(fn, jobs: list, workers: Optional[int] = None) -> list:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def make_header(clip: VideoClip, config: EncoderConfig, chroma: bool = True) -> StreamHeader:
    gop = config.gop_length
    pad = -clip.frame_count % gop
    fps = config.fps_fraction
    return StreamHeader(
        width=clip.width, height=clip.height, frame_count=clip.frame_count,
        chroma=int(chroma), gop_length=gop, temporal_levels=config.temporal_levels,
        spatial_levels=config.spatial_levels, temporal_filter=int(config.temporal_filter),
        spatial_filter=int(config.spatial_filter), normalization=config.normalization,
        termination_exponent=config.min_exponent, pad_frames=pad, tree=int(config.tree),
        weighted=int(config.weighted), fps_num=fps.numerator, fps_den=fps.denominator,
        rate_split=tuple(config.rate_split))


def encode_clip(clip: VideoClip, kbps: Optional[float] = None,
                config: Optional[EncoderConfig] = None, *, chroma: bool = True,
                workers: Optional[int] = None) -> bytes:
    """Encode a clip; ``kbps=None`` codes every bitplane down to the stop exponent."""
    config = config or EncoderConfig()
    if clip.frame_count == 0:
        raise InvalidDimensions("clip has no frames")
    if kbps is not None and kbps <= 0:
        raise ValueError("kbps must be positive")
    header = make_header(clip, config, chroma)
    budgets = gop_budgets(header, kbps)
    ngops = -(-clip.frame_count // header.gop_length)
    jobs, keys = [], []
    for g in range(ngops):
        for c, plane in enumerate(clip.planes[: len(header.components)]):
            spec = plane_spec(header, c)
            jobs.append((_gop_frames(plane, g, header.gop_length), spec, header.tree,
                         bool(header.weighted), budgets[c], header.termination_exponent))
            keys.append((c, g))
    results = _run(_encode_job, jobs, workers)
    out = [write_header(header)]
    for (c, g), res in zip(keys, results):
        out.append(write_segment(GopSegment(c, g, res.exponent, res.bits)))
    return b"".join(out)


def decode_stream(data: bytes, kbps: Optional[float] = None, *,
                  workers: Optional[int] = None) -> VideoClip:
    """Decode a stream, optionally reading only the prefix a lower rate allows.

    Missing or short segments decode to whatever their bits carry (mid-grey
    when nothing is present), so any byte prefix that keeps the header yields
    a clip of the declared size.
    """
    header = read_header(data)
    if header.width == 0 or header.height == 0 or header.frame_count == 0:
        raise CorruptStream("header declares an empty clip")
    try:
        specs = [plane_spec(header, c) for c in range(len(header.components))]
    except (InvalidDimensions, ValueError) as exc:
        raise CorruptStream(f"inconsistent header: {exc}") from None
    budgets = gop_budgets(header, kbps)
    gop = header.gop_length
    ngops = -(-header.frame_count // gop)
    f = ngops * gop
    w, h = header.width, header.height
    sizes = [(h, w)] + [((h + 1) // 2, (w + 1) // 2)] * 2
    planes = [np.full((f,) + sizes[c], LEVEL_SHIFT) for c in range(len(header.components))]

    jobs, keys = [], []
    for seg in iter_segments(data, HEADER_SIZE):
        c, g = seg.component, seg.gop_index
        if c >= len(specs) or g >= ngops:
            raise CorruptStream(f"segment for component {c}, GOP {g} out of range")
        if seg.empty or len(seg.bits) == 0:
            continue
        payload = GopBits(seg.exponent, seg.bits)
        jobs.append((payload, specs[c], header.tree, bool(header.weighted), budgets[c],
                     header.termination_exponent, *sizes[c]))
        keys.append((c, g))
    for (c, g), frames in zip(keys, _run(_decode_job, jobs, workers)):
        planes[c][g * gop : (g + 1) * gop] = frames

    n = header.frame_count
    out = [to_samples(p[:n]) for p in planes]
    if len(out) == 1:
        ch = (n, (h + 1) // 2, (w + 1) // 2)
        out += [np.full(ch, 128, np.uint8), np.full(ch, 128, np.uint8)]
    return VideoClip(*out)


def truncate_stream(data: bytes, kbps: float) -> bytes:
    """Rewrite a stream keeping only the segment prefixes a lower rate allows."""
    header = read_header(data)
    budgets = gop_budgets(header, kbps)
    out = [data[:HEADER_SIZE]]
    for seg in iter_segments(data, HEADER_SIZE):
        if seg.component >= len(budgets):
            raise CorruptStream(f"segment component {seg.component} out of range")
        bits = seg.bits[: budgets[seg.component]]
        out.append(write_segment(GopSegment(seg.component, seg.gop_index, seg.exponent, bits)))
    return b"".join(out)


def stream_rate_kbps(data: bytes) -> float:
    header = read_header(data)
    seconds = header.frame_count * header.fps_den / header.fps_num
    return 8 * len(data) / seconds / 1000.0


def clip_gops(clip: VideoClip, config: EncoderConfig, component: int = 0
              ) -> Sequence[CoeffVolume]:
    """Weighted (per config) coefficient volumes of every GOP of one plane."""
    header = make_header(clip, config)
    spec = plane_spec(header, component)
    plane = clip.planes[component]
    ngops = -(-clip.frame_count // config.gop_length)
    return [analyze_plane_gop(_gop_frames(plane, g, config.gop_length), spec, config.weighted)
            for g in range(ngops)]
