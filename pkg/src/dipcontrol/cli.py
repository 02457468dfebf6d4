"""Command-line interface.

Subcommands cover the five restoration/enhancement tasks plus a pure
measurement mode::

    dipcontrol denoise   --in noisy.png --ref clean.png --out restored.png
    dipcontrol deblock   --in decoded.png --ref original.png
    dipcontrol inpaint   --in holed.png --mask central:0.25
    dipcontrol superres  --in low.png --factor 4
    dipcontrol enhance   --in photo.png --lam 1
    dipcontrol measure-fbc --in sequence_dir --target y0.png

Every run writes a JSON echo of all effective parameters (seed included)
next to its outputs, so any result can be reproduced from its artifacts.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .autodiff.optim import make_rng
from .fbc import band_partition, fbc
from .imageio import load_image, save_image, write_trace_csv
from .networks import NetworkSpec
from .quality import blurriness, psnr, sharpness
from .tasks import (
    DegradedObservation,
    RunConfig,
    TraceRecord,
    bernoulli_mask,
    central_mask,
    enhance,
    restore,
)

RESTORE_TASKS = ("denoise", "deblock", "inpaint", "superres")
DEFAULT_SUPERRES_ITERS = {4: 2_000, 8: 4_000}

_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def _luma_psnr(a, b):
    ya = np.tensordot(_LUMA, a[0], axes=([0], [0]))
    yb = np.tensordot(_LUMA, b[0], axes=([0], [0]))
    return psnr(ya, yb)


def _add_common(parser, default_stop):
    parser.add_argument("--in", dest="input", required=True, help="degraded input PNG")
    parser.add_argument("--ref", help="clean reference PNG (evaluation only)")
    parser.add_argument("--out", help="restored output PNG path")
    parser.add_argument("--trace", help="write the per-iteration trace CSV here")
    parser.add_argument("--lam", type=float, default=2.0, help="spectral-norm bound (0 = unbounded)")
    parser.add_argument("--sigma-up", type=float, default=0.5, help="Gaussian upsampling width")
    parser.add_argument("--iters", type=int, default=None, help="iteration budget")
    parser.add_argument("--stop", choices=["on", "off"], default=default_stop, help="automatic stopping")
    parser.add_argument("--stop-n", type=int, default=100, help="stopping window length")
    parser.add_argument("--stop-eps", type=float, default=0.01, help="stopping threshold")
    parser.add_argument("--bands", type=int, default=5, help="number of frequency bands")
    parser.add_argument("--seed", type=int, default=0, help="run seed")
    parser.add_argument("--trace-every", type=int, default=10, help="trace stride in iterations")
    parser.add_argument("--log-every", type=int, default=500, help="progress line stride (0 = quiet)")
    parser.add_argument("--channels", type=int, default=128, help="generator channel width")
    parser.add_argument("--stages", type=int, default=5, help="generator stage count")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dipcontrol",
        description="Restore a single degraded image with a spectrally controlled untrained generator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text, stop in [
        ("denoise", "remove additive noise", "on"),
        ("deblock", "reduce compression artifacts (pre-decoded PNG input)", "on"),
        ("inpaint", "fill masked-out pixels", "on"),
        ("superres", "upscale a low-resolution image", "off"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p, default_stop=stop)
        if name == "inpaint":
            p.add_argument(
                "--mask",
                required=True,
                help="mask PNG path (nonzero = observed), or bernoulli:P / central:RATIO",
            )
        if name == "superres":
            p.add_argument("--factor", type=int, default=4, help="upscaling factor")

    p = sub.add_parser("enhance", help="unsharp-mask detail enhancement")
    _add_common(p, default_stop="off")

    p = sub.add_parser("measure-fbc", help="frequency-band correspondence of an image sequence")
    p.add_argument("--in", dest="input", required=True, help="directory of PNG frames")
    p.add_argument("--target", required=True, help="target image PNG")
    p.add_argument("--ref", help="clean reference PNG for the psnr column")
    p.add_argument("--bands", type=int, default=5, help="number of frequency bands")
    p.add_argument("--out", default="fbc.csv", help="output CSV path")
    return parser


def _resolve_mask(spec_text, shape_hw, seed):
    h, w = shape_hw
    if spec_text.startswith("bernoulli:"):
        prob = float(spec_text.split(":", 1)[1])
        return bernoulli_mask(h, w, prob, make_rng(seed))
    if spec_text.startswith("central:"):
        ratio = float(spec_text.split(":", 1)[1])
        return central_mask(h, w, ratio)
    mask_img = load_image(spec_text)
    return (mask_img[0, 0] > 0.5).astype(np.float32)


def _config_echo(path, args, extra):
    echo = {k: v for k, v in vars(args).items() if k != "command"}
    echo["command"] = args.command
    echo.update(extra)
    echo_path = Path(path).with_name(Path(path).stem + "_config.json")
    echo_path.write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return echo_path


def _run_restore_task(args):
    y0 = load_image(args.input)
    reference = load_image(args.ref) if args.ref else None

    if args.command == "inpaint":
        mask = _resolve_mask(args.mask, y0.shape[-2:], args.seed)
        obs = DegradedObservation(y0, "mask", mask=mask, clean_reference=reference)
    elif args.command == "superres":
        obs = DegradedObservation(
            y0, "downsample", factor=args.factor, clean_reference=reference
        )
    else:
        obs = DegradedObservation(y0, "identity", clean_reference=reference)

    iters = args.iters
    if iters is None:
        if args.command == "superres":
            iters = DEFAULT_SUPERRES_ITERS.get(args.factor, 2_000)
        else:
            iters = 10_000

    lam = None if args.lam == 0 else args.lam
    spec = NetworkSpec(
        channels=args.channels,
        stages=args.stages,
        upsample_sigma=args.sigma_up,
        lipschitz_lambda=lam,
        out_channels=y0.shape[1],
    )
    cfg = RunConfig(
        network=spec,
        max_iters=iters,
        stopping=args.stop == "on",
        stop_n=args.stop_n,
        stop_eps=args.stop_eps,
        fbc_every=args.trace_every,
        n_bands=args.bands,
        seed=args.seed,
        log_every=args.log_every,
    )
    result = restore(obs, cfg)

    out_path = args.out or f"{Path(args.input).stem}_{args.command}.png"
    save_image(result.restored, out_path)
    written = [str(out_path)]
    if args.trace:
        write_trace_csv(result.trace, args.trace, n_bands=args.bands)
        written.append(str(args.trace))
    echo_path = _config_echo(out_path, args, {"iters_effective": iters, "stop_iteration": result.stop_iteration})
    written.append(str(echo_path))

    print(f"stop iteration: {result.stop_iteration}")
    if reference is not None:
        score = psnr(result.restored, reference)
        print(f"final PSNR (RGB): {score:.2f} dB")
        if reference.shape[1] == 3:
            print(f"final PSNR (Y):   {_luma_psnr(result.restored, reference):.2f} dB")
    print("wrote: " + ", ".join(written))
    return 0


def _run_enhance(args):
    x0 = load_image(args.input)
    iters = args.iters if args.iters is not None else 5_000
    lam = None if args.lam == 0 else args.lam
    spec = NetworkSpec(
        channels=args.channels,
        stages=args.stages,
        upsample_sigma=args.sigma_up,
        lipschitz_lambda=lam,
        out_channels=x0.shape[1],
    )
    enhanced = enhance(x0, lam, iters=iters, seed=args.seed, network=spec)
    out_path = args.out or f"{Path(args.input).stem}_enhanced.png"
    save_image(enhanced, out_path)
    echo_path = _config_echo(out_path, args, {"iters_effective": iters})
    print(f"wrote: {out_path}, {echo_path}")
    return 0


def _run_measure_fbc(args):
    target = load_image(args.target)
    reference = load_image(args.ref) if args.ref else None
    frames = sorted(Path(args.input).glob("*.png"))
    if not frames:
        raise FileNotFoundError(f"no PNG files in {args.input}")
    partition = band_partition(target.shape[-2], target.shape[-1], args.bands)
    rows = []
    for index, frame in enumerate(frames, start=1):
        img = load_image(frame)
        bands = fbc(img, target, partition, step=index)
        ratio = blurriness(img) / max(sharpness(img), 1e-12)
        quality = psnr(img, reference) if reference is not None else None
        rows.append(TraceRecord(index, None, quality, ratio, bands.values))
    write_trace_csv(rows, args.out, n_bands=args.bands)
    print(f"measured {len(rows)} frames; wrote: {args.out}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in RESTORE_TASKS:
            return _run_restore_task(args)
        if args.command == "enhance":
            return _run_enhance(args)
        return _run_measure_fbc(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
