"""``lcvsr`` command line: degrade, train, sr, eval, profile, filters, gradcheck, config."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
from pathlib import Path

import numpy as np

THREADS_ENV = "LCVSR_THREADS"
GRADCHECK_TOLERANCE = 1e-2
GRADCHECK_MIN_COORDS = 20

log = logging.getLogger("lcvsr")


class CLIError(Exception):
    pass


def resolve_threads(flag: int | None, deterministic: bool) -> int:
    """Environment beats flag; otherwise deterministic runs use one thread."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise CLIError(f"{THREADS_ENV}={env!r} is not an integer") from exc
    elif flag is not None:
        n = flag
    else:
        n = 1 if deterministic else (os.cpu_count() or 1)
    if n < 1:
        raise CLIError(f"thread count must be >= 1, got {n}")
    return n


def _limit_threads(n: int):
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _sequence_dirs(root: Path) -> list[Path]:
    """Sub-directories holding frames, or ``root`` itself if it holds frames."""
    from lcvsr.data.io import FRAME_SUFFIXES

    if not root.is_dir():
        raise CLIError(f"input directory {root} does not exist")
    if any(p.suffix.lower() in FRAME_SUFFIXES for p in root.iterdir()):
        return [root]
    seqs = sorted(p for p in root.rglob("*") if p.is_dir() and any(q.suffix.lower() in FRAME_SUFFIXES for q in p.iterdir()))
    if not seqs:
        raise CLIError(f"no sequence directories with frames under {root}")
    return seqs


def _write_config_echo(out: Path, cfg) -> None:
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "config.json")


# ------------------------------------------------------------------ subcommands


def cmd_degrade(args) -> int:
    from lcvsr.data.degrade import degrade
    from lcvsr.data.io import frame_paths, read_sequence, to_uint8, write_image

    src, dst = Path(args.inp), Path(args.out)
    sigma = None if args.no_blur else args.sigma
    count = 0
    for seq in _sequence_dirs(src):
        target = dst / seq.relative_to(src)
        paths = frame_paths(seq)
        if args.scale == 1 and not sigma:
            target.mkdir(parents=True, exist_ok=True)
            for p in paths:
                shutil.copyfile(p, target / p.name)
            count += len(paths)
            continue
        for p, frame in zip(paths, read_sequence(seq)):
            unit = frame.astype(np.float64) / 255.0
            lr = np.stack([degrade(unit[:, :, c], args.scale, sigma) for c in range(3)], axis=2)
            write_image(target / (p.stem + ".png"), to_uint8(lr))
            count += 1
    print(json.dumps({"frames": count, "scale": args.scale, "sigma": sigma, "out": str(dst)}))
    return 0


def _dataset_for(run):
    from lcvsr.data.dataset import SequenceDataset
    from lcvsr.data.synthetic import synthetic_dataset

    data = run.data
    if data.index is not None:
        return SequenceDataset.from_index(data.index, swing=run.eval.swing)
    spec = data.synthetic_spec
    seqs = synthetic_dataset(spec.count, seed=data.seed, frames=spec.frames, height=spec.height, width=spec.width)
    return SequenceDataset(seqs)


def _load_run_config(args):
    from lcvsr.config import RunConfig, preset

    if args.config and args.preset:
        raise CLIError("give either --config or --preset, not both")
    if args.config:
        return RunConfig.load(args.config)
    return preset(args.preset or "desk")


def cmd_train(args) -> int:
    from lcvsr import checkpoint
    from lcvsr.data.dataset import TrainingPairs
    from lcvsr.plotting import plot_loss_curve
    from lcvsr.train import train

    run = _load_run_config(args)
    if args.iterations is not None:
        run.train.iterations = args.iterations
    out = Path(args.out)
    _write_config_echo(out, run)
    print(json.dumps(run.to_dict(), sort_keys=True))
    resume = checkpoint.load(args.resume) if args.resume else None
    threads = resolve_threads(args.threads if args.threads is not None else run.train.threads, run.train.deterministic)
    pairs = TrainingPairs(_dataset_for(run), run.model.r, run.model.C, run.data.patch, seed=run.data.seed, sigma=run.data.sigma)
    with _limit_threads(threads):
        result = train(pairs, run.model, run.train, out_dir=out, seed=run.data.seed, resume=resume)
    records = [json.loads(line) for line in (out / "train_log.jsonl").read_text().splitlines() if line]
    plot_loss_curve(records, out / "loss.png")
    final = result.records[-1]["loss"] if result.records else None
    print(json.dumps({"iterations": result.optimizer.step, "final_loss": final, "checkpoint": str(out / "model.lcvw")}))
    return 0


def _model_from_ckpt(args):
    from lcvsr import checkpoint
    from lcvsr.config import RunConfig
    from lcvsr.train import params_from_checkpoint

    ckpt = checkpoint.load(args.ckpt)
    cfg = RunConfig.load(args.config).model if getattr(args, "config", None) else ckpt.config
    return params_from_checkpoint(ckpt, cfg), cfg


def _y_window(seq_dir, cfg, swing):
    from lcvsr.data.color import rgb_to_ycbcr
    from lcvsr.data.dataset import center_window
    from lcvsr.data.io import read_sequence

    frames = read_sequence(seq_dir)
    if len(frames) < cfg.C:
        raise CLIError(f"{seq_dir} has {len(frames)} frames, the model needs {cfg.C}")
    window = center_window(frames, cfg.C)
    return window, np.stack([rgb_to_ycbcr(f, swing).y for f in window])


def cmd_sr(args) -> int:
    from lcvsr.data.io import write_image
    from lcvsr.pipeline import super_resolve_rgb

    params, cfg = _model_from_ckpt(args)
    window, _ = _y_window(args.inp, cfg, args.swing)
    with _limit_threads(resolve_threads(args.threads, True)):
        rgb = super_resolve_rgb(window, params, cfg, swing=args.swing)
    write_image(args.out, rgb)
    print(json.dumps({"out": str(args.out), "height": rgb.shape[0], "width": rgb.shape[1]}))
    return 0


def cmd_eval(args) -> int:
    from lcvsr.metrics import evaluate_dirs
    from lcvsr.plotting import plot_frame_metrics

    report = evaluate_dirs(args.pred, args.truth, crop=args.crop, swing=args.swing)
    summary = report.to_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.write_json(out / "metrics.json")
        report.write_csv(out / "metrics.csv")
        plot_frame_metrics(report, out / "metrics.png")
    print(json.dumps({"mean_psnr": summary["mean_psnr"], "mean_ssim": summary["mean_ssim"], **summary["config"]}))
    return 0


def cmd_profile(args) -> int:
    from lcvsr.data.color import rgb_to_ycbcr
    from lcvsr.data.io import read_sequence, write_image
    from lcvsr.visualize import temporal_profile

    ys = [rgb_to_ycbcr(f, args.swing).y for f in read_sequence(args.inp)]
    prof = temporal_profile(ys, args.row)
    write_image(args.out, prof)
    if args.figure:
        from lcvsr.plotting import plot_gray

        plot_gray(prof, args.figure, title=f"row {args.row}, {len(ys)} frames")
    print(json.dumps({"out": str(args.out), "rows": prof.shape[0], "width": prof.shape[1]}))
    return 0


def _region(text: str) -> tuple[int, int, int, int]:
    try:
        parts = tuple(int(v) for v in text.split(","))
    except ValueError:
        parts = ()
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("region must be i0,j0,h,w")
    return parts


def cmd_filters(args) -> int:
    from lcvsr.data.io import write_image
    from lcvsr.pipeline import super_resolve_y
    from lcvsr.visualize import visualize_filters

    params, cfg = _model_from_ckpt(args)
    if cfg.ablate_lc:
        raise CLIError("the checkpoint is an ablation model with no dynamic filters")
    _, y = _y_window(args.inp, cfg, args.swing)
    with _limit_threads(resolve_threads(args.threads, True)):
        _, theta = super_resolve_y(y, params, cfg, return_filters=True)
    frame = cfg.T if args.frame is None else args.frame
    img = visualize_filters(theta, cfg.s, args.region, frame=frame, fmap=args.map)
    write_image(args.out, img)
    if args.figure:
        from lcvsr.plotting import plot_gray

        plot_gray(img, args.figure, title=f"region {args.region}, frame {frame}, map {args.map}")
    print(json.dumps({"out": str(args.out), "height": img.shape[0], "width": img.shape[1]}))
    return 0


def gradcheck_model(seed: int) -> dict[str, dict]:
    """Relative errors of the end-to-end gradient at a random init (7x8x8 input, r=2)."""
    from lcvsr import ops
    from lcvsr.gradcheck import grad_check
    from lcvsr.model import ModelConfig, init_params, lcvsr_forward

    cfg = ModelConfig(r=2, lfgn_widths=(8, 12, 16), grn_widths=(4, 6, 8, 6, 4), resblocks_per_subblock=1)
    params = init_params(cfg, seed)
    x = np.random.default_rng(seed).random((cfg.C, 8, 8))
    targets = {"input": (lambda t: lcvsr_forward(t, params, cfg), x)}
    for name in ("lfgn.sub1.res0.conv1.weight", "lfgn.sub4.res1.conv2.weight", "grn.sub4.conv.weight", "grn.out.weight"):

        def f(w, name=name):
            p = dict(params)
            p[name] = w
            return ops.mean_all(lcvsr_forward(x, p, cfg))

        targets[name] = (f, params[name].data)
    out = {}
    for name, (f, point) in targets.items():
        # small steps keep most probes on one side of every LeakyReLU kink
        err, det = grad_check(f, point, eps=1e-4, samples=40, seed=seed, return_details=True)
        out[name] = {"max_rel_error": err, "checked": det["checked"], "skipped": det["skipped"]}
    return out


def cmd_gradcheck(args) -> int:
    with _limit_threads(resolve_threads(args.threads, True)):
        detail = gradcheck_model(args.seed)
    worst = max(d["max_rel_error"] for d in detail.values())
    covered = all(d["checked"] >= GRADCHECK_MIN_COORDS for d in detail.values())
    passed = worst < GRADCHECK_TOLERANCE and covered
    print(json.dumps({"seed": args.seed, "max_rel_error": worst, "tolerance": GRADCHECK_TOLERANCE, "pass": passed, "detail": detail}))
    return 0 if passed else 1


def cmd_config(args) -> int:
    from lcvsr.config import preset

    print(json.dumps(preset(args.preset).to_dict(), indent=2, sort_keys=True))
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcvsr", description="Video super-resolution with dynamic local filters.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=fn)
        p.add_argument("--threads", type=int, default=None, help=f"worker threads ({THREADS_ENV} overrides)")
        return p

    p = add("degrade", cmd_degrade, "blur and decimate HR sequences into LR sequences")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--no-blur", action="store_true", help="decimate (or copy at scale 1) without blurring")

    p = add("train", cmd_train, "train a model from a run config")
    p.add_argument("--config")
    p.add_argument("--preset", choices=("desk", "full"))
    p.add_argument("--out", required=True)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--iterations", type=int, help="override train.iterations")

    for name, fn, text in (("sr", cmd_sr, "super-resolve the centre frame of an LR sequence"), ("filters", cmd_filters, "render generated filters")):
        p = add(name, fn, text)
        p.add_argument("--ckpt", required=True)
        p.add_argument("--in", dest="inp", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--config", help="run config whose model section must match the checkpoint")
        p.add_argument("--swing", choices=("studio", "full"), default="studio")
    p.add_argument("--region", type=_region, default=(0, 0, 5, 5), help="i0,j0,h,w in LR pixels")
    p.add_argument("--frame", type=int, default=None, help="input frame index (default centre)")
    p.add_argument("--map", type=int, default=0)
    p.add_argument("--figure", help="also write a labelled figure here")

    p = add("eval", cmd_eval, "Y-PSNR / SSIM of predicted frames against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--crop", type=int, default=0)
    p.add_argument("--swing", choices=("studio", "full"), default="studio")
    p.add_argument("--out", help="directory for metrics.json, metrics.csv and metrics.png")

    p = add("profile", cmd_profile, "temporal profile of one row across frames")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--row", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--swing", choices=("studio", "full"), default="studio")
    p.add_argument("--figure")

    p = add("gradcheck", cmd_gradcheck, "finite-difference check of the full model gradient")
    p.add_argument("--seed", type=int, default=0)

    p = add("config", cmd_config, "print a preset run config")
    p.add_argument("--preset", choices=("desk", "full"), default="desk")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parsable line
        print(json.dumps({"error": type(exc).__name__, "command": args.command, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
