"""Command-line interface: ``ewsp encode|decode|analyze|weights``."""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence


from . import analysis
from .codec import EncoderConfig, clip_gops, decode_stream, encode_clip
from .errors import CodecError
from .tree import get_topology
from .videoio import read_yuv420, synthetic_clip, write_yuv420
from .wavelet import NORM_JPEG2000, NORM_UNSCALED, DecompositionSpec
from .weighting import build_weight_table

DEFAULT_RATES = (128, 256, 384, 500, 768, 1000, 1500)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _rate_split(text: str) -> tuple[int, int, int]:
    if text == "auto":
        return (4, 1, 1)
    try:
        parts = tuple(int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rate split {text!r}") from None
    if len(parts) != 3 or min(parts) < 0 or sum(parts) == 0:
        raise argparse.ArgumentTypeError("rate split needs three non-negative integers y:u:v")
    return parts


def _norm(text: str) -> int:
    table = {"jpeg2000": NORM_JPEG2000, "unscaled": NORM_UNSCALED}
    if text not in table:
        raise argparse.ArgumentTypeError(f"normalization must be one of {sorted(table)}")
    return table[text]


def _add_transform_flags(p):
    p.add_argument("--gop", type=int, default=16, help="GOP length in frames")
    p.add_argument("--tlevels", type=int, default=4, help="temporal levels (5/3)")
    p.add_argument("--slevels", type=int, default=3, help="spatial levels (9/7)")
    p.add_argument("--normalization", type=_norm, default=NORM_JPEG2000,
                   help="filter gains: jpeg2000 (default) or unscaled")


def _add_source_flags(p):
    p.add_argument("--input", help="raw I420 .yuv file (omit for a synthetic clip)")
    p.add_argument("--width", type=int, default=352)
    p.add_argument("--height", type=int, default=288)
    p.add_argument("--frames", type=int, help="frames to use (default: all / 16 synthetic)")
    p.add_argument("--seed", type=int, default=0, help="synthetic clip seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ewsp", description="3-D wavelet video codec with weighted subbands")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    enc = sub.add_parser("encode", help="encode a raw I420 clip")
    enc.add_argument("--input", required=True)
    enc.add_argument("--width", type=int, required=True)
    enc.add_argument("--height", type=int, required=True)
    enc.add_argument("--frames", type=int, help="encode only the first N frames")
    enc.add_argument("--bitrate", type=float, help="target kbps (default: all bitplanes)")
    enc.add_argument("--fps", type=float, default=30.0)
    _add_transform_flags(enc)
    enc.add_argument("--tree", choices=("ewspb", "asym"), default="ewspb")
    enc.add_argument("--no-weights", action="store_true", help="disable subband weighting")
    enc.add_argument("--rate-split", type=_rate_split, default=(4, 1, 1),
                     help="Y:U:V budget shares, or 'auto' (4:1:1)")
    enc.add_argument("--output", required=True)

    dec = sub.add_parser("decode", help="decode a stream to raw I420")
    dec.add_argument("--input", required=True)
    dec.add_argument("--budget", type=float, help="decode only the prefix for this kbps")
    dec.add_argument("--output", required=True)

    ana = sub.add_parser("analyze", help="weight tables, energy, zerotree ratios, RD curves")
    ana.add_argument("--mode", choices=("weights", "energy", "zerotree", "rd"), required=True)
    _add_source_flags(ana)
    _add_transform_flags(ana)
    ana.add_argument("--tree", choices=("ewspb", "asym"), default="ewspb",
                     help="tree for rd mode")
    ana.add_argument("--no-weights", action="store_true")
    ana.add_argument("--degree", type=int, choices=(1, 2), default=1)
    ana.add_argument("--scans", type=int, default=7)
    ana.add_argument("--nodes", choices=("all", "sets"), default="all",
                     help="zerotree denominator: every node or set roots only")
    ana.add_argument("--bitrates", default=",".join(map(str, DEFAULT_RATES)),
                     help="comma-separated kbps list for rd mode")
    ana.add_argument("--csv", help="write the report as CSV here")

    wts = sub.add_parser("weights", help="print the subband weight table")
    wts.add_argument("--width", type=int, default=352)
    wts.add_argument("--height", type=int, default=288)
    _add_transform_flags(wts)
    wts.add_argument("--csv", help="write the table as CSV here")
    return parser


def _config(args, **kw) -> EncoderConfig:
    return EncoderConfig(gop_length=args.gop, temporal_levels=args.tlevels,
                         spatial_levels=args.slevels, normalization=args.normalization, **kw)


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_clip(args):
    if args.input:
        clip = read_yuv420(args.input, args.width, args.height)
        if args.frames:
            clip = type(clip)(clip.y[: args.frames], clip.u[: args.frames], clip.v[: args.frames])
        return clip
    return synthetic_clip(args.width, args.height, args.frames or 16, seed=args.seed)


def cmd_encode(args) -> int:
    clip = read_yuv420(args.input, args.width, args.height)
    if args.frames:
        if args.frames > clip.frame_count:
            raise CodecError(f"file holds {clip.frame_count} frames, asked for {args.frames}")
        clip = type(clip)(clip.y[: args.frames], clip.u[: args.frames], clip.v[: args.frames])
    config = _config(args, tree=args.tree, weighted=not args.no_weights,
                     rate_split=args.rate_split, fps=args.fps)
    data = encode_clip(clip, args.bitrate, config)
    with open(args.output, "wb") as fh:
        fh.write(data)
    print(f"{clip.frame_count} frames -> {len(data)} bytes", file=sys.stderr)
    return 0


def cmd_decode(args) -> int:
    with open(args.input, "rb") as fh:
        data = fh.read()
    clip = decode_stream(data, args.budget)
    write_yuv420(clip, args.output)
    print(f"{clip.frame_count} frames {clip.width}x{clip.height}", file=sys.stderr)
    return 0


def _weights_csv(args) -> str:
    spec = DecompositionSpec(args.tlevels, args.slevels, "53", "97", args.gop,
                             args.width, args.height, args.normalization)
    return build_weight_table(spec).to_csv()


def cmd_weights(args) -> int:
    _emit(_weights_csv(args), args.csv)
    return 0


def cmd_analyze(args) -> int:
    if args.mode == "weights":
        _emit(_weights_csv(args), args.csv)
        return 0
    clip = _load_clip(args)
    weighted = not args.no_weights
    if args.mode == "rd":
        try:
            rates = [float(r) for r in args.bitrates.split(",") if r]
        except ValueError:
            raise CodecError(f"bad bitrate list {args.bitrates!r}") from None
        pts = analysis.rd_curve(clip, _config(args, tree=args.tree, weighted=weighted), rates)
        _emit(analysis.rd_csv(pts), args.csv)
        return 0
    coeffs = clip_gops(clip, _config(args, weighted=weighted))[0]
    if args.mode == "energy":
        _emit(analysis.energy_csv(analysis.subband_energy_report(coeffs)), args.csv)
        return 0
    topos = {"asym": get_topology("asym", coeffs.spec), "ewspb": get_topology("ewspb", coeffs.spec)}
    rows = analysis.zerotree_table(coeffs, topos, range(1, args.scans + 1), args.degree,
                                   args.nodes)
    lines = ["scan,asym,ewspb"] + [f"{r['scan']},{r['asym']:.2f},{r['ewspb']:.2f}" for r in rows]
    _emit("\n".join(lines) + "\n", args.csv)
    return 0


COMMANDS = {"encode": cmd_encode, "decode": cmd_decode, "analyze": cmd_analyze,
            "weights": cmd_weights}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, CodecError, ValueError) as exc:
        print(f"ewsp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
