"""Raw planar YUV 4:2:0 (I420) files, PSNR, and synthetic test clips."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensions, InvalidFile


@dataclass
class VideoClip:
    y: np.ndarray  # (frames, height, width) uint8
    u: np.ndarray  # (frames, ceil(height/2), ceil(width/2))
    v: np.ndarray

    def __post_init__(self):
        f, h, w = self.y.shape
        cshape = (f, (h + 1) // 2, (w + 1) // 2)
        if self.u.shape != cshape or self.v.shape != cshape:
            raise InvalidDimensions(f"chroma planes must be {cshape}")

    @property
    def width(self) -> int:
        return self.y.shape[2]

    @property
    def height(self) -> int:
        return self.y.shape[1]

    @property
    def frame_count(self) -> int:
        return self.y.shape[0]

    @property
    def planes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.y, self.u, self.v

    @classmethod
    def blank(cls, width: int, height: int, frames: int, value: int = 128) -> "VideoClip":
        cw, ch = (width + 1) // 2, (height + 1) // 2
        return cls(np.full((frames, height, width), value, np.uint8),
                   np.full((frames, ch, cw), value, np.uint8),
                   np.full((frames, ch, cw), value, np.uint8))


def frame_bytes(width: int, height: int) -> int:
    return width * height + 2 * ((width + 1) // 2) * ((height + 1) // 2)


def read_yuv420(path, width: int, height: int) -> VideoClip:
    if width <= 0 or height <= 0:
        raise InvalidDimensions("width and height must be positive")
    size = os.path.getsize(path)
    fb = frame_bytes(width, height)
    if size == 0 or size % fb:
        raise InvalidFile(f"{path}: {size} bytes is not a whole number of {width}x{height} frames")
    raw = np.fromfile(path, dtype=np.uint8).reshape(-1, fb)
    ysz = width * height
    csz = ((width + 1) // 2) * ((height + 1) // 2)
    cshape = (-1, (height + 1) // 2, (width + 1) // 2)
    return VideoClip(raw[:, :ysz].reshape(-1, height, width).copy(),
                     raw[:, ysz : ysz + csz].reshape(cshape).copy(),
                     raw[:, ysz + csz :].reshape(cshape).copy())


def write_yuv420(clip: VideoClip, path):
    f = clip.frame_count
    raw = np.concatenate([p.reshape(f, -1) for p in clip.planes], axis=1)
    raw.astype(np.uint8).tofile(path)


def to_samples(x: np.ndarray) -> np.ndarray:
    """Round half away from zero and clamp to 8-bit."""
    r = np.where(x >= 0, np.floor(x + 0.5), np.ceil(x - 0.5))
    return np.clip(r, 0, 255).astype(np.uint8)


def mse(ref, test) -> float:
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise InvalidDimensions(f"shape mismatch {ref.shape} vs {test.shape}")
    return float(np.mean((ref - test) ** 2))


def psnr(ref, test, peak: float = 255.0) -> float:
    err = mse(ref, test)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def synthetic_clip(width: int = 352, height: int = 288, frames: int = 16, *,
                   seed: int = 0, spatial_noise: float = 12.0,
                   temporal_noise: float = 2.0, motion: float = 1.0,
                   amplitude: float = 60.0) -> VideoClip:
    """Moving sinusoidal gradients over a static texture plus per-frame noise.

    ``spatial_noise`` is the std of a texture that is fixed in time and so
    lands in the temporal low band; ``temporal_noise`` is the std of fresh
    noise drawn for every frame; ``motion`` is the drift in pixels per frame.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(frames)[:, None, None]
    yy, xx = np.mgrid[0:height, 0:width]
    phase = rng.uniform(0, 2 * np.pi, size=4)
    fx, fy = rng.uniform(0.01, 0.05, size=2)

    def pattern(scale_x, scale_y, shift):
        x = xx[None] / scale_x - motion * t / scale_x
        y = yy[None] / scale_y
        base = (np.sin(2 * np.pi * fx * x + phase[0] + shift)
                + 0.6 * np.sin(2 * np.pi * fy * y + phase[1] + 0.3 * np.pi * fx * x)
                + 0.4 * np.cos(2 * np.pi * (fx + fy) * (x + y) / 2 + phase[2]))
        ramp = (xx[None] / max(width - 1, 1) - 0.5) * 0.5
        return base + ramp

    texture = rng.normal(0.0, spatial_noise, size=(height, width))
    luma = 128 + amplitude * pattern(1.0, 1.0, 0.0) * 0.6 + texture[None]
    luma = luma + rng.normal(0.0, temporal_noise, size=luma.shape)
    ch, cw = (height + 1) // 2, (width + 1) // 2
    cy, cx = np.mgrid[0:ch, 0:cw]

    def chroma(shift):
        x = 2 * cx[None] - motion * t
        return 128 + 0.3 * amplitude * np.sin(2 * np.pi * fx * x + phase[3] + shift) \
            * np.cos(2 * np.pi * fy * 2 * cy[None])

    u = chroma(0.0) + rng.normal(0.0, temporal_noise / 2, size=(frames, ch, cw))
    v = chroma(1.3) + rng.normal(0.0, temporal_noise / 2, size=(frames, ch, cw))
    return VideoClip(to_samples(luma), to_samples(u), to_samples(v))
