"""Figure rendering for experiment outputs.

Every report CSV gets a companion PNG.  Figures are simple validation
plots: analytic curves as lines, empirical values as markers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SCHEME_STYLE = {
    "cuma": dict(color="tab:blue", marker="o"),
    "zf": dict(color="tab:red", marker="s"),
    "mmse": dict(color="tab:green", marker="^"),
    "japbo": dict(color="tab:purple", marker="d"),
}


def _new_axes(xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, linestyle=":", linewidth=0.6)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_cdf(columns: dict, path) -> None:
    tau_db = np.asarray(columns["tau_db"])
    etas = np.asarray(columns["eta"])
    fig, ax = _new_axes("SIR threshold (dB)", "CDF")
    for i, eta in enumerate(np.unique(etas)):
        sel = etas == eta
        color = f"C{i}"
        ax.plot(
            tau_db[sel],
            1.0 - np.asarray(columns["coverage_analytic"])[sel],
            color=color,
            label=f"analytic, eta={eta:g}",
        )
        ax.plot(
            tau_db[sel][::3],
            1.0 - np.asarray(columns["coverage_empirical"])[sel][::3],
            color=color,
            linestyle="none",
            marker="o",
            markersize=4,
            label=f"simulated, eta={eta:g}",
        )
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8)
    _save(fig, path)


def render_rate_vs_lambda(columns: dict, path, unit="nats") -> None:
    lam = np.asarray(columns["lambda_ratio"])
    fig, ax = _new_axes("UE-to-BS density ratio", f"average user rate ({unit}/use)")
    ax.plot(lam, columns["avg_rate_analytic"], color="C0", label="analytic")
    ax.plot(
        lam,
        columns["avg_rate_empirical"],
        color="C0",
        linestyle="none",
        marker="o",
        label="simulated",
    )
    ax.legend(fontsize=8)
    _save(fig, path)


def render_asymptotic(columns: dict, path, unit="nats") -> None:
    lam = np.asarray(columns["lambda_ratio"])
    etas = np.asarray(columns["eta"])
    fig, ax = _new_axes("UE-to-BS density ratio", f"cell sum rate ({unit}/use)")
    for i, eta in enumerate(np.unique(etas)):
        sel = etas == eta
        color = f"C{i}"
        ax.semilogx(lam[sel], np.asarray(columns["cell_rate_analytic"])[sel], color=color,
                    label=f"eta={eta:g}")
        ax.axhline(np.asarray(columns["asymptote"])[sel][0], color=color, linestyle="--",
                   linewidth=0.9)
    ax.legend(fontsize=8)
    _save(fig, path)


def render_benchmarks(columns: dict, sweep_name: str, path, unit="nats", logx=False) -> None:
    x = np.asarray(columns[sweep_name])
    fig, ax = _new_axes(sweep_name.replace("_", " "), f"cell sum rate ({unit}/use)")
    plot = ax.semilogx if logx else ax.plot
    for scheme, style in _SCHEME_STYLE.items():
        key = f"cell_rate_{scheme}"
        if key in columns:
            vals = np.asarray(columns[key], dtype=float)
            if np.isnan(vals).all():
                continue
            plot(x, vals, label=scheme, linewidth=1.2, markersize=4, **style)
    if "cell_rate_cuma_analytic" in columns:
        plot(
            x,
            columns["cell_rate_cuma_analytic"],
            color="k",
            linestyle="--",
            linewidth=1.0,
            label="cuma analytic",
        )
    ax.legend(fontsize=8)
    _save(fig, path)
