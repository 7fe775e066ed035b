"""3-D wavelet video codec with energy-weighted subbands and a
significance probability balancing tree."""

from .codec import EncoderConfig, decode_stream, encode_clip, truncate_stream
from .errors import CodecError
from .tree import TreeKind, get_topology
from .videoio import VideoClip, psnr, read_yuv420, synthetic_clip, write_yuv420
from .wavelet import CoeffVolume, DecompositionSpec, FilterId, forward_gop, inverse_gop
from .weighting import build_weight_table

__all__ = [
    "CodecError", "CoeffVolume", "DecompositionSpec", "EncoderConfig", "FilterId",
    "TreeKind", "VideoClip", "build_weight_table", "decode_stream", "encode_clip",
    "forward_gop", "get_topology", "inverse_gop", "psnr", "read_yuv420",
    "synthetic_clip", "truncate_stream", "write_yuv420",
]
__version__ = "0.1.0"
