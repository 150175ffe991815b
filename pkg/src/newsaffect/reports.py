"""Plot-data series and figure rendering for the pipeline's CSV outputs.

The prevalence series covers the dense UTC day range of the corpus: per day,
the fraction of outlet posts whose score on each affect dimension is nonzero,
smoothed with a trailing 7-day window (only complete windows are emitted,
empty days carry NaN and are ignored by the window average). Figures are
rendered with the Agg backend and no embedded timestamps, so a given seed
and input tree reproduces every PNG byte for byte.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .affect import DIMS, AffectVector
from .corpus import Corpus
from .errors import DataError

logger = logging.getLogger(__name__)

WINDOW_DAYS = 7


def _day_str(day: int) -> str:
    return datetime.fromtimestamp(day * 86400, tz=timezone.utc).date().isoformat()


@dataclass
class PrevalenceSeries:
    days: list[int]               # epoch days, dense
    daily: np.ndarray             # n_days x 18, NaN on empty days
    smoothed_days: list[int]      # last day of each complete window
    smoothed: np.ndarray          # len(smoothed_days) x 18


def prevalence_series(corpus: Corpus, scores: dict[str, AffectVector],
                      window: int = WINDOW_DAYS) -> PrevalenceSeries:
    outlet = corpus.outlet_tweets()
    if not outlet:
        raise DataError("no outlet posts; prevalence series undefined")
    days = [t.day for t in outlet]
    lo, hi = min(days), max(days)
    n_days = hi - lo + 1
    hits = np.zeros((n_days, 18))
    totals = np.zeros(n_days)
    for t in outlet:
        d = t.day - lo
        totals[d] += 1
        hits[d] += scores[t.id].vector() > 0
    daily = np.full((n_days, 18), np.nan)
    nonempty = totals > 0
    daily[nonempty] = hits[nonempty] / totals[nonempty, None]

    smoothed_days: list[int] = []
    rows = []
    for end in range(window - 1, n_days):
        block = daily[end - window + 1:end + 1]
        ok = ~np.isnan(block)
        counts = ok.sum(axis=0)
        sums = np.where(ok, block, 0.0).sum(axis=0)
        row = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        rows.append(row)
        smoothed_days.append(lo + end)
    smoothed = np.asarray(rows) if rows else np.empty((0, 18))
    if not rows:
        logger.warning("span %d days is shorter than the %d-day window; "
                       "smoothed series is empty", n_days, window)
    return PrevalenceSeries(days=list(range(lo, hi + 1)), daily=daily,
                            smoothed_days=smoothed_days, smoothed=smoothed)


def _write_series_csv(path: Path, days: list[int], mat: np.ndarray,
                      seed: int | None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow(("date",) + DIMS)
        for i, day in enumerate(days):
            row = [_day_str(day)]
            for x in mat[i]:
                row.append("" if np.isnan(x) else format(x, ".12g"))
            w.writerow(row)


def write_prevalence(out_dir: str | Path, series: PrevalenceSeries,
                     seed: int | None = None) -> None:
    out = Path(out_dir)
    _write_series_csv(out / "prevalence_daily.csv", series.days, series.daily, seed)
    _write_series_csv(out / "prevalence_series.csv", series.smoothed_days,
                      series.smoothed, seed)


# ---------------------------------------------------------------- figures


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=120, metadata={"Date": None})
    _plt().close(fig)


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            f.seek(0)
        reader = csv.reader(f)
        header = next(reader)
        rows = [r for r in reader if r]
    return header, rows


def render_prevalence(csv_path: Path, png_path: Path) -> None:
    header, rows = _read_csv(csv_path)
    dims = header[1:]
    dates = [r[0] for r in rows]
    mat = np.array([[float(x) if x else np.nan for x in r[1:]] for r in rows])
    plt = _plt()
    fig, axes = plt.subplots(2, 1, figsize=(11, 7), sharex=True)
    x = np.arange(len(dates))
    for j, dim in enumerate(dims):
        ax = axes[0] if j < 8 else axes[1]
        ax.plot(x, mat[:, j], label=dim, linewidth=1.2)
    axes[0].set_ylabel("share of posts (emotions)")
    axes[1].set_ylabel("share of posts (morals)")
    for ax in axes:
        ax.legend(ncol=5, fontsize=7)
        ax.set_ylim(bottom=0)
    step = max(len(dates) // 10, 1)
    axes[1].set_xticks(x[::step])
    axes[1].set_xticklabels(dates[::step], rotation=45, ha="right", fontsize=7)
    fig.suptitle("7-day prevalence of affect dimensions in outlet posts")
    fig.tight_layout()
    _save(fig, png_path)


def render_pac_curve(csv_path: Path, png_path: Path) -> None:
    header, rows = _read_csv(csv_path)
    ks = [int(r[0]) for r in rows]
    pac = [float(r[1]) for r in rows]
    chosen = [k for k, r in zip(ks, rows) if r[2] == "1"]
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ks, pac, marker="o", markersize=3)
    if chosen:
        ax.axvline(chosen[0], color="tab:red", linestyle="--",
                   label=f"chosen K={chosen[0]}")
        ax.legend()
    ax.set_xlabel("K")
    ax.set_ylabel("PAC")
    ax.set_title("Consensus clustering stability")
    fig.tight_layout()
    _save(fig, png_path)


def render_ev_curve(csv_path: Path, png_path: Path) -> None:
    header, rows = _read_csv(csv_path)
    ks = [int(r[0]) for r in rows]
    ev = [float(r[1]) for r in rows]
    chosen = [k for k, r in zip(ks, rows) if r[2] == "1"]
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ks, ev, marker="o", markersize=3)
    if chosen:
        ax.axvline(chosen[0], color="tab:red", linestyle="--",
                   label=f"chosen K={chosen[0]}")
        ax.legend()
    ax.set_xlabel("number of factors")
    ax.set_ylabel("explained variance")
    ax.set_title("Factorization rank selection")
    fig.tight_layout()
    _save(fig, png_path)


def render_composition(csv_path: Path, png_path: Path) -> None:
    header, rows = _read_csv(csv_path)
    factors = header[1:]
    dims = [r[0] for r in rows]
    mat = np.array([[float(x) for x in r[1:]] for r in rows])
    plt = _plt()
    fig, ax = plt.subplots(figsize=(1.2 + 0.9 * len(factors), 6))
    im = ax.imshow(mat, aspect="auto", cmap="viridis")
    ax.set_yticks(range(len(dims)))
    ax.set_yticklabels(dims, fontsize=8)
    ax.set_xticks(range(len(factors)))
    ax.set_xticklabels(factors, rotation=30, ha="right", fontsize=8)
    fig.colorbar(im, ax=ax, label="weight")
    ax.set_title("Factor composition")
    fig.tight_layout()
    _save(fig, png_path)


def render_coefficients(csv_path: Path, png_path: Path) -> None:
    header, rows = _read_csv(csv_path)
    targets = sorted({r[1] for r in rows})
    schemes = [s for s in ("emotions", "morals", "nmf")
               if any(r[0] == s for r in rows)]
    if not schemes:
        schemes = sorted({r[0] for r in rows})
    plt = _plt()
    fig, axes = plt.subplots(1, len(targets), figsize=(3.2 * len(targets), 7),
                             sharey=True, squeeze=False)
    colors = {"emotions": "tab:red", "morals": "tab:blue", "nmf": "tab:orange"}
    labels: list[str] = []
    for s in schemes:
        feats = sorted({r[2] for r in rows if r[0] == s})
        labels.extend(f"{s}:{f}" for f in feats)
    pos = {lab: i for i, lab in enumerate(labels)}
    for col, target in enumerate(targets):
        ax = axes[0][col]
        for r in rows:
            scheme, tgt, feat = r[0], r[1], r[2]
            if tgt != target or scheme not in schemes:
                continue
            lab = f"{scheme}:{feat}"
            beta = float(r[3])
            sig = r[6] == "1"
            ax.barh(pos[lab], beta, color=colors.get(scheme, "tab:gray"),
                    alpha=1.0 if sig else 0.3)
        ax.axvline(0, color="black", linewidth=0.6)
        ax.set_title(target, fontsize=9)
        ax.tick_params(labelsize=7)
    axes[0][0].set_yticks(range(len(labels)))
    axes[0][0].set_yticklabels(labels, fontsize=7)
    fig.suptitle("Standardized coefficients (faded = p > 0.05)")
    fig.tight_layout()
    _save(fig, png_path)


def render_r2(csv_path: Path, png_path: Path) -> None:
    header, rows = _read_csv(csv_path)
    targets = header[1:]
    models = [r[0] for r in rows]
    plt = _plt()
    fig, ax = plt.subplots(figsize=(9, 4.5))
    width = 0.8 / max(len(targets), 1)
    x = np.arange(len(models))
    for j, t in enumerate(targets):
        vals = [float(r[j + 1]) if r[j + 1] else np.nan for r in rows]
        ax.bar(x + j * width, vals, width, label=t)
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels(models, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("adjusted R²")
    ax.set_title("Model fit per feature scheme and target")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, png_path)


_RENDERERS = (
    ("prevalence_series.csv", "fig_prevalence.png", render_prevalence),
    ("pac_curve.csv", "fig_pac_curve.png", render_pac_curve),
    ("ev_curve.csv", "fig_ev_curve.png", render_ev_curve),
    ("factor_composition.csv", "fig_composition.png", render_composition),
    ("coefficients.csv", "fig_coefficients.png", render_coefficients),
    ("r2_table.csv", "fig_r2.png", render_r2),
)


def render_figures(out_dir: str | Path) -> list[Path]:
    """Render a PNG beside every recognized CSV present in out_dir."""
    out = Path(out_dir)
    written: list[Path] = []
    for csv_name, png_name, fn in _RENDERERS:
        src = out / csv_name
        if not src.is_file():
            continue
        dst = out / png_name
        fn(src, dst)
        written.append(dst)
        logger.info("rendered %s", dst)
    return written
