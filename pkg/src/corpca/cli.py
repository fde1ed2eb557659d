"""Command-line interface: phase-transition grids, measurement bounds,
synthetic sequence generation, and compressive video separation."""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundInputs, bound_l1, bound_l1l1, bound_nl1, noisy_bound
from .experiments import METHODS, SynthConfig, run_phase_grid
from .pgm import load_mask_sequence, load_pgm_sequence
from .prox import SideInfoSet, update_weights
from .video import (
    choose_dimensions,
    gen_video_sequence,
    separate_sequence,
    write_sequence,
)

WEIGHT_EPS = 0.8


def _int_list(text):
    return [int(tok) for tok in text.split(",") if tok]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="corpca",
        description="Online sparse + low-rank separation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase", help="Monte-Carlo phase-transition grid")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--s0-list", type=_int_list, required=True)
    p.add_argument("--m-list", type=_int_list, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--j", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=METHODS, default="nl1")
    p.add_argument("--grade-all", action="store_true")

    p = sub.add_parser("bound", help="measurement-bound calculator")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s0", type=int, required=True)
    p.add_argument("--prior-file")
    p.add_argument("--rho", type=float)
    p.add_argument("--mode", choices=METHODS, default="l1")
    p.add_argument("--out", required=True)

    p = sub.add_parser("separate", help="compressive video separation")
    p.add_argument("--frames", required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--train", type=int, required=True)
    p.add_argument("--j", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--masks")

    p = sub.add_parser("synth", help="synthetic video sequence generator")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--d", type=int, default=40)
    p.add_argument("--q", type=int, default=40)
    p.add_argument("--s0", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def cmd_phase(args):
    cfg = SynthConfig(n=args.n, s0=args.s0_list[0], seed=0)
    grid = run_phase_grid(
        cfg, args.s0_list, args.m_list, args.trials, args.seed,
        j=args.j, method=args.method, grade_all=args.grade_all,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(
            f"# seed={args.seed} n={args.n} j={args.j} "
            f"method={args.method} trials={args.trials} "
            f"grade_all={args.grade_all} eps={WEIGHT_EPS} "
            f"lam=1/sqrt(n) version={__version__}\n"
        )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["s0", "m", "trials", "successes",
             "bound_nl1", "bound_l1l1", "bound_l1"]
        )
        for s0, m, trials, successes, b_nl1, b_l1l1, b_l1 in grid.rows():
            writer.writerow([
                s0, m, trials, successes,
                f"{b_nl1:.12g}", f"{b_l1l1:.12g}", f"{b_l1:.12g}",
            ])
    return 0


def _load_prior_file(path, n):
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, tok in zip(header, row):
                cols[name].append(float(tok))
    if "x" not in cols:
        raise ValueError("prior file needs an 'x' column")
    x = np.asarray(cols.pop("x"))
    if x.size != n:
        raise ValueError(f"prior file has {x.size} rows, expected n={n}")
    z = [np.asarray(cols[name]) for name in sorted(cols)]
    return x, z


def cmd_bound(args):
    rows = []
    if args.mode == "l1":
        value = bound_l1(args.n, args.s0)
        if args.rho is not None:
            value = noisy_bound(value, args.rho)
        rows.append(("l1", args.n, args.s0, args.rho, value))
    else:
        if not args.prior_file:
            raise ValueError(
                f"--prior-file is required for mode {args.mode} "
                "(data-dependent bound)"
            )
        x, z = _load_prior_file(args.prior_file, args.n)
        if not z:
            raise ValueError("prior file has no side-information columns")
        s0 = int(np.sum(np.abs(x) > 1e-12))
        if args.mode == "l1l1":
            value = bound_l1l1(args.n, x, z[0])
            if args.rho is not None:
                value = noisy_bound(value, args.rho)
        else:
            si = update_weights(x, SideInfoSet.uniform(np.vstack(z)),
                                WEIGHT_EPS)
            inp = BoundInputs.from_signal(x, np.vstack(z), si.beta,
                                          WEIGHT_EPS, rho=args.rho)
            value = bound_nl1(inp, noisy=args.rho is not None)
        rows.append((args.mode, args.n, s0, args.rho, value))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(f"# eps={WEIGHT_EPS} version={__version__}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mode", "n", "s0", "rho", "value"])
        for mode, n, s0, rho, value in rows:
            writer.writerow([
                mode, n, s0,
                "" if rho is None else f"{rho:.12g}", f"{value:.12g}",
            ])
    return 0


def cmd_separate(args):
    seq = load_pgm_sequence(args.frames)
    masks = None
    if args.masks:
        masks, mw, mh = load_mask_sequence(args.masks)
        if (mw, mh) != (seq.width, seq.height):
            raise ValueError(
                f"mask dimensions {mw}x{mh} do not match frames "
                f"{seq.width}x{seq.height}"
            )
        if len(masks) != len(seq.frames):
            raise ValueError(
                f"{len(masks)} masks for {len(seq.frames)} frames"
            )
    separate_sequence(
        seq, args.rate, args.train, args.j, args.seed,
        out_dir=args.out, masks=masks,
    )
    return 0


def cmd_synth(args):
    width, height = choose_dimensions(args.n)
    seq, _, _ = gen_video_sequence(
        width, height, args.r, args.d, args.q, args.s0, args.seed
    )
    write_sequence(seq, args.out)
    return 0


HANDLERS = {
    "phase": cmd_phase,
    "bound": cmd_bound,
    "separate": cmd_separate,
    "synth": cmd_synth,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
