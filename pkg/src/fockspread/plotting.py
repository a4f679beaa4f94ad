"""SVG figures rendered purely from the CSV files written by the CLI."""
from __future__ import annotations

import csv
import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "fockspread"
_SVG_META = {"Date": None, "Creator": None}


def _read(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_ipr(csv_path, svg_path, L: int):
    rows = _read(csv_path)
    by_q = defaultdict(list)
    for r in rows:
        by_q[int(r["q"])].append(r)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for q, rs in sorted(by_q.items()):
        rs = [r for r in rs if int(r["t"]) >= 1]
        t = [int(r["t"]) for r in rs]
        haar = math.factorial(q) * 2.0 ** (L * (1 - q))
        line, = ax1.plot(t, [float(r["I_q_analytic"]) / haar for r in rs], label=f"q={q}")
        ax1.plot(t, [float(r["haar_ratio"]) for r in rs], "x", color=line.get_color())
        ax2.plot(t, [float(r["S_q_analytic"]) for r in rs], color=line.get_color())
        ax2.plot(t, [float(r["S_q"]) for r in rs], "x", color=line.get_color())
        ax2.axhline(L * math.log(2) + math.lgamma(q + 1) / (1 - q), ls="--", color=line.get_color(), lw=0.8)
    ax1.axhline(1.0, ls="--", color="k", lw=0.8)
    ax1.set_yscale("log")
    ax1.set_xlabel("t")
    ax1.set_ylabel(r"$I_q / I_q^{\rm Haar}$")
    ax2.set_xlabel("t")
    ax2.set_ylabel(r"$S_q$")
    ax1.legend(fontsize=8)
    _save(fig, svg_path)


def plot_histogram(csv_path, svg_path, title: str = ""):
    rows = [r for r in _read(csv_path) if float(r["bin_hi"]) > 0]
    mid = [(float(r["bin_lo"]) + float(r["bin_hi"])) / 2 for r in rows]
    width = float(rows[0]["bin_hi"]) - float(rows[0]["bin_lo"])
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    ax.bar(mid, [float(r["density"]) for r in rows], width=width, color="0.75", label="numerics")
    ax.plot(mid, [float(r["analytic"]) for r in rows], "r-", label="analytic")
    ax.plot(mid, [float(r["porter_thomas"]) for r in rows], "k--", label="Porter-Thomas")
    ax.set_xlabel(r"$N p$")
    ax.set_ylabel(r"$\mathcal{P}(Np)$")
    ax.set_title(title)
    ax.legend(fontsize=8)
    _save(fig, svg_path)


def plot_compare(csv_path, svg_path):
    rows = _read(csv_path)
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    groups = defaultdict(list)
    for r in rows:
        groups[(r["model"], int(r["L"]))].append(r)
    styles = {"dual": "-", "random": "--", "mid1": ":", "mid2": "-."}
    for (model, L), rs in sorted(groups.items()):
        ax.plot([int(r["t"]) for r in rs], [float(r["S_2"]) - (L - 1) * math.log(2) for r in rs],
                styles.get(model, "-"), label=f"{model} L={L}")
    ax.axhline(0.0, color="k", ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$S_2 - (L-1)\ln 2$")
    ax.set_ylim(-2.0, 1.0)
    ax.legend(fontsize=7, ncol=2)
    _save(fig, svg_path)
