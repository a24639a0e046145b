"""CSV and SVG output for episodes and sweeps.

Data files contain no timestamps, so rerunning a report on the same records
reproduces them byte for byte.
"""
import csv
import math
import os

import numpy as np

from .data_pipeline import fmt_float
from .errors import IoError


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def write_episode_csv(record, path):
    names = list(record.columns)
    cols = [record.columns[n] for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([fmt_float(x) for x in row])


def read_episode_csv(path):
    from .experiment import EpisodeRecord, ise

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise IoError(f"{path}: empty file")
    names = rows[0]
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    data = data.reshape(-1, len(names))
    columns = {n: data[:, i].copy() for i, n in enumerate(names)}
    summary = {"steps": data.shape[0], **ise(columns),
               "mode": "run_deepo" if np.any(columns.get("u_deepo", np.zeros(1)) != 0) else "run_fl_only"}
    return EpisodeRecord(columns=columns, summary=summary)


SUMMARY_FIELDS = ("axis", "value", "episodes", "mean_ISE_phi", "std_ISE_phi",
                  "mean_ISE_phi_dot", "std_ISE_phi_dot", "fall_rate")


def write_summary_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in SUMMARY_FIELDS])


def read_summary_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        rec = dict(r)
        for k in SUMMARY_FIELDS[2:]:
            rec[k] = float(rec[k])
        out.append(rec)
    return out


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "deepobike"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_tracking(records, labels, path):
    """Lean angle and lean rate against their references, plus outer input."""
    plt = _pyplot()
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    ref = records[0].columns
    axes[0].plot(ref["t"], np.degrees(ref["phi_r"]), "k--", lw=1, label="reference")
    axes[1].plot(ref["t"], np.degrees(ref["phi_r_dot"]), "k--", lw=1, label="reference")
    for rec, lab in zip(records, labels):
        c = rec.columns
        axes[0].plot(c["t"], np.degrees(c["phi"]), lw=0.8, label=lab)
        axes[1].plot(c["t"], np.degrees(c["phi_dot"]), lw=0.8, label=lab)
        axes[2].plot(c["t"], c["u_total"], lw=0.6, label=f"{lab} total")
        if np.any(c["u_deepo"] != 0):
            axes[2].plot(c["t"], c["u_deepo"] + c["e_probe"], lw=0.6, label=f"{lab} outer")
    axes[0].set_ylabel("lean [deg]")
    axes[1].set_ylabel("lean rate [deg/s]")
    axes[2].set_ylabel("u [rad/s]")
    axes[2].set_xlabel("time [s]")
    for ax in axes:
        ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_gains(records, labels, path):
    plt = _pyplot()
    gains = [k for k in records[0].columns if k.startswith("K")]
    fig, axes = plt.subplots(len(gains), 1, figsize=(8, 2.5 * len(gains)), sharex=True,
                             squeeze=False)
    for ax, g in zip(axes[:, 0], gains):
        for rec, lab in zip(records, labels):
            ax.plot(rec.columns["t"], rec.columns[g], lw=0.9, label=lab)
        ax.set_ylabel(g)
        ax.legend(fontsize=7)
    axes[-1, 0].set_xlabel("time [s]")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_ise_bars(rows, path, title=""):
    plt = _pyplot()
    labels = [r["value"] for r in rows]
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(x - 0.2, [r["mean_ISE_phi"] for r in rows], 0.4,
           yerr=[r["std_ISE_phi"] for r in rows], label="ISE lean [deg^2]")
    ax.bar(x + 0.2, [r["mean_ISE_phi_dot"] for r in rows], 0.4,
           yerr=[r["std_ISE_phi_dot"] for r in rows], label="ISE lean rate [(deg/s)^2]")
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def _ensure_dir(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def report_episodes(records, out_dir, labels=None, prefix="episode"):
    """Episode CSVs plus tracking and gain plots; returns written paths."""
    if not records:
        raise IoError("nothing to report: empty record list")
    labels = labels or [r.summary.get("mode", f"run{i}") for i, r in enumerate(records)]
    _ensure_dir(out_dir)
    paths = []
    try:
        for rec, lab in zip(records, labels):
            p = os.path.join(out_dir, f"{prefix}_{lab}.csv")
            write_episode_csv(rec, p)
            paths.append(p)
        p = os.path.join(out_dir, f"{prefix}_tracking.svg")
        plot_tracking(records, labels, p)
        paths.append(p)
        adaptive = [(r, lab) for r, lab in zip(records, labels) if np.any(r.columns["K00"] != 0)]
        if adaptive:
            p = os.path.join(out_dir, f"{prefix}_gains.svg")
            plot_gains([a[0] for a in adaptive], [a[1] for a in adaptive], p)
            paths.append(p)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return paths


def report_sweep(sweep_report, out_dir):
    """Summary CSV (one row per cell), per-episode CSVs and plots."""
    rows = sweep_report.summary_rows()
    if not rows:
        raise IoError("nothing to report: sweep has no cells")
    _ensure_dir(out_dir)
    paths = []
    try:
        p = os.path.join(out_dir, "summary.csv")
        write_summary_csv(rows, p)
        paths.append(p)
        first = []
        for cell in sweep_report.cells:
            for r, rec in enumerate(cell.records):
                p = os.path.join(out_dir, f"episode_{sweep_report.axis}-{cell.label}_r{r}.csv")
                write_episode_csv(rec, p)
                paths.append(p)
            if cell.records:
                first.append((cell.records[0], f"{sweep_report.axis}={cell.label}"))
        p = os.path.join(out_dir, "ise.svg")
        plot_ise_bars(rows, p, title=f"ISE per {sweep_report.axis}")
        paths.append(p)
        adaptive = [(rec, lab) for rec, lab in first if np.any(rec.columns["K00"] != 0)]
        if adaptive:
            p = os.path.join(out_dir, "gains.svg")
            plot_gains([a[0] for a in adaptive], [a[1] for a in adaptive], p)
            paths.append(p)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return paths


def rerender(in_dir, out_dir=None):
    """Rebuild plots from CSVs previously written to ``in_dir``."""
    out_dir = out_dir or in_dir
    if not os.path.isdir(in_dir):
        raise IoError(f"{in_dir}: not a directory")
    _ensure_dir(out_dir)
    paths = []
    summary = os.path.join(in_dir, "summary.csv")
    if os.path.exists(summary):
        rows = read_summary_csv(summary)
        for r in rows:
            for k in ("mean_ISE_phi", "std_ISE_phi", "mean_ISE_phi_dot", "std_ISE_phi_dot"):
                if math.isnan(r[k]):
                    r[k] = 0.0
        p = os.path.join(out_dir, "ise.svg")
        plot_ise_bars(rows, p, title=f"ISE per {rows[0]['axis']}" if rows else "")
        paths.append(p)
    eps = sorted(f for f in os.listdir(in_dir) if f.startswith("episode") and f.endswith(".csv"))
    if eps:
        recs = [read_episode_csv(os.path.join(in_dir, f)) for f in eps]
        labels = [f[len("episode_"):-4] for f in eps]
        p = os.path.join(out_dir, "tracking.svg")
        plot_tracking(recs, labels, p)
        paths.append(p)
    if not paths:
        raise IoError(f"{in_dir}: no CSVs to render")
    return paths
