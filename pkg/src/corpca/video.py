"""Synthetic surveillance-style sequences (low-rank background plus a moving
sparse block) and the end-to-end compressive separation pipeline."""

import csv
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import best_f1, roc_eval
from .pgm import FrameSequence, frame_to_vector, vector_to_frame, write_pgm
from .solvers import (
    DivergenceError,
    MeasurementModel,
    SolverConfig,
    bootstrap_prior,
    corpca_step,
)

ROC_THRESHOLDS = np.linspace(0.0, 1.0, 33)


def choose_dimensions(n):
    """Pick (width, height) for an n-pixel frame: the divisor of n closest
    to the height of a 4:3 landscape frame (so 4800 becomes 80 x 60)."""
    target = np.sqrt(0.75 * n)
    best_h = 1
    for h in range(1, int(np.sqrt(n)) + 1):
        if n % h == 0 and abs(h - target) < abs(best_h - target):
            best_h = h
    return n // best_h, best_h


def _block_shape(s0):
    bh = max(1, int(round(np.sqrt(s0))))
    bw = -(-s0 // bh)
    return bh, bw


def gen_video_sequence(width, height, r, d, q, s0, seed):
    """Synthetic sequence: rank-r background plus an s0-pixel moving block.

    The background is a base image in [0.3, 0.5] (a rank-one component that
    is constant in time) plus r-1 low-amplitude spatial patterns with
    smooth sinusoidal time courses, so the stacked background frames have
    rank exactly r and stay inside [0, 1] together with the foreground.
    Returns (FrameSequence with masks, background matrix, foreground matrix).
    """
    if s0 > width * height // 4:
        raise ValueError("block too large for the frame")
    rng = np.random.default_rng(seed)
    n = width * height
    cols = d + q

    base = rng.uniform(0.3, 0.5, n)
    bg = np.tile(base[:, None], (1, cols))
    for k in range(r - 1):
        pattern = rng.uniform(-0.04, 0.04, n)
        freq = rng.uniform(0.5, 2.0)
        phase = rng.uniform(0, 2 * np.pi)
        course = np.cos(2 * np.pi * freq * np.arange(cols) / cols + phase)
        bg += np.outer(pattern, course)

    bh, bw = _block_shape(s0)
    intensity = 0.3 + 0.1 * rng.random(s0)
    row = int(rng.integers(0, height - bh + 1))
    col = int(rng.integers(0, width - bw + 1))

    fg = np.zeros((n, cols))
    masks = []
    for t in range(cols):
        cells = [(row + i, col + j) for i in range(bh) for j in range(bw)]
        cells = cells[:s0]
        idx = np.array([rr + cc * height for rr, cc in cells])
        fg[idx, t] = intensity
        mask = np.zeros(n, dtype=bool)
        mask[idx] = True
        masks.append(mask)
        row = int(np.clip(row + rng.integers(-2, 3), 0, height - bh))
        col = int(np.clip(col + rng.integers(-2, 3), 0, width - bw))

    frames = [bg[:, t] + fg[:, t] for t in range(cols)]
    seq = FrameSequence(width=width, height=height, frames=frames,
                        masks=masks)
    return seq, bg, fg


def write_sequence(seq, out_dir):
    """Write frames (and masks when present) as PGM files plus a
    ground-truth CSV listing foreground pixels per frame."""
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    for t, frame in enumerate(seq.frames):
        write_pgm(out / "frames" / f"frame_{t:04d}.pgm",
                  vector_to_frame(frame, seq.width, seq.height))
    if seq.masks is not None:
        (out / "masks").mkdir(exist_ok=True)
        with open(out / "truth.csv", "w", newline="") as fh:
            fh.write(f"# width={seq.width} height={seq.height} "
                     f"version={__version__}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["frame", "pixel"])
            for t, mask in enumerate(seq.masks):
                write_pgm(out / "masks" / f"mask_{t:04d}.pgm",
                          vector_to_frame(mask.astype(float), seq.width,
                                          seq.height))
                for pix in np.flatnonzero(mask):
                    writer.writerow([t, int(pix)])


def _normalized_magnitude(x):
    mags = np.abs(x)
    top = mags.max()
    return mags / top if top > 0 else mags


def separate_sequence(seq, rate, train, j, seed, cfg=None, out_dir=None,
                      masks=None):
    """Online separation of a frame sequence from compressive measurements.

    Bootstraps the priors from the first `train` frames (full data), then
    measures each later frame at the given rate (rate 1 keeps the identity
    projection) and separates it. Writes per-frame foreground (|sparse|,
    min-max normalized) and background PGMs plus a summary CSV of relative
    measurement residuals, with a best-F1 column and an ROC CSV when masks
    are given. Returns the summary rows.
    """
    n = seq.n
    if len(seq.frames) <= train:
        raise ValueError(
            f"sequence has {len(seq.frames)} frames; need more than "
            f"train={train}"
        )
    m = int(round(rate * n))
    if not (0 < rate <= 1) or m < 1:
        raise ValueError(f"invalid measurement rate {rate}")
    masks = masks if masks is not None else seq.masks
    cfg = cfg or SolverConfig(tol=2e-10, max_iter=1000)
    rng = np.random.default_rng(seed)

    training = np.column_stack(seq.frames[:train])
    prior, si = bootstrap_prior(training, j=j)
    if rate >= 1.0:
        proto = None
    else:
        proto = MeasurementModel.gaussian(n, m, rng)

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "foreground").mkdir(parents=True, exist_ok=True)
        (out / "background").mkdir(exist_ok=True)

    rows = []
    roc_rows = []
    for t in range(train, len(seq.frames)):
        frame = seq.frames[t]
        if proto is None:
            meas = MeasurementModel.identity(frame)
        else:
            meas = proto.with_signal(frame)
        try:
            res, si, prior = corpca_step(meas, si, prior, cfg)
            x_hat, v_hat = res.x_hat, res.v_hat
        except DivergenceError:
            x_hat = np.zeros(n)
            v_hat = np.zeros(n)
        resid = meas.apply(x_hat + v_hat) - meas.y
        rel = float(np.linalg.norm(resid)
                    / max(np.linalg.norm(meas.y), np.finfo(float).tiny))
        f1 = ""
        scores = _normalized_magnitude(x_hat)
        if masks is not None and masks[t].any():
            f1 = f"{best_f1(scores, masks[t]):.12g}"
            for theta, (fpr, tpr) in zip(
                sorted(ROC_THRESHOLDS, reverse=True),
                roc_eval(scores, masks[t], ROC_THRESHOLDS),
            ):
                roc_rows.append((t, theta, fpr, tpr))
        rows.append((t, rel, f1))
        if out is not None:
            write_pgm(out / "foreground" / f"frame_{t:04d}.pgm",
                      vector_to_frame(scores, seq.width, seq.height))
            write_pgm(out / "background" / f"frame_{t:04d}.pgm",
                      vector_to_frame(np.clip(v_hat, 0, 1), seq.width,
                                      seq.height))

    if out is not None:
        meta = (f"# seed={seed} rate={rate:.12g} train={train} j={j} "
                f"eps={cfg.eps:.12g} lam={'auto' if cfg.lam is None else cfg.lam} "
                f"tol={cfg.tol:.12g} max_iter={cfg.max_iter} "
                f"version={__version__}")
        with open(out / "summary.csv", "w", newline="") as fh:
            fh.write(meta + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["frame", "residual", "f1"])
            for t, rel, f1 in rows:
                writer.writerow([t, f"{rel:.12g}", f1])
        if roc_rows:
            with open(out / "roc.csv", "w", newline="") as fh:
                fh.write(meta + "\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["frame", "threshold", "fpr", "tpr"])
                for t, theta, fpr, tpr in roc_rows:
                    writer.writerow(
                        [t, f"{theta:.12g}", f"{fpr:.12g}", f"{tpr:.12g}"]
                    )
    return rows
