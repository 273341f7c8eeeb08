"""Report figures rendered to files next to the delimited output.

All plotting is non-interactive (Agg); each helper takes plain data and an
output path and returns the path, so the report command can list what it
wrote.
"""

from __future__ import annotations

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIGSIZE = (6.4, 4.2)


def save_refinement_curve(table: list[dict], path: str) -> str:
    """Growth estimate against the shrinking time floor, log-log."""
    floors = [row["floor"] for row in table]
    gammas = [max(row["gamma"], 1e-16) for row in table]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.loglog(floors, gammas, "o-", color="tab:red")
    ax.invert_xaxis()
    ax.set_xlabel("time floor of the sampling window")
    ax.set_ylabel("growth estimate")
    ax.set_title("growth estimate under window refinement")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_field_figure(times, axes, numeric, analytic, path: str) -> str:
    """Final-level field and its error: heatmaps in 2-D, lines in 1-D."""
    n = len(axes)
    if n == 1:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.8))
        x = axes[0]
        ax1.plot(x, analytic, "k--", label="candidate")
        ax1.plot(x, numeric, "tab:blue", label="numeric")
        ax1.set_xlabel("x"); ax1.set_ylabel("value")
        ax1.legend(); ax1.set_title(f"value at t={times:.3f}")
        ax2.plot(x, np.abs(numeric - analytic), "tab:red")
        ax2.set_xlabel("x"); ax2.set_ylabel("abs error")
        ax2.set_title("error")
    elif n == 2:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
        extent = [axes[0][0], axes[0][-1], axes[1][0], axes[1][-1]]
        im1 = ax1.imshow(numeric.T, origin="lower", extent=extent, cmap="viridis")
        ax1.set_title(f"numeric value at t={times:.3f}")
        fig.colorbar(im1, ax=ax1, shrink=0.85)
        im2 = ax2.imshow(np.abs(numeric - analytic).T, origin="lower",
                         extent=extent, cmap="magma")
        ax2.set_title("abs error vs candidate")
        fig.colorbar(im2, ax=ax2, shrink=0.85)
        for ax in (ax1, ax2):
            ax.set_xlabel("x1"); ax.set_ylabel("x2")
    else:
        fig, ax = plt.subplots(figsize=FIGSIZE)
        ax.hist(np.abs(numeric - analytic).ravel(), bins=50, color="tab:red")
        ax.set_xlabel("abs error"); ax.set_ylabel("count")
        ax.set_title(f"error histogram at t={times:.3f}")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_identity_errors(errors: list[float], bound: float, path: str) -> str:
    """Histogram of |iterated optimum - H| against the mesh bound."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.hist(errors, bins=40, color="tab:blue", alpha=0.85)
    ax.axvline(bound, color="tab:red", linestyle="--",
               label=f"mesh bound {bound:.3g}")
    ax.set_xlabel("|iterated optimum - H|")
    ax.set_ylabel("samples")
    ax.set_title("dynamics identity check")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_strata_map(strata: list[dict], path: str) -> str:
    """Scatter of sampled kink positions colored by their one-sided class (n=2)."""
    colors = {"cj_minus": "tab:blue", "cj_plus": "tab:orange",
              "neither": "tab:red", "smooth": "tab:gray"}
    fig, ax = plt.subplots(figsize=(5.2, 5.0))
    seen = set()
    for e in strata:
        x = e["position"]["x"]
        if len(x) != 2:
            plt.close(fig)
            return ""
        cls = e["cj_class"]
        label = cls if cls not in seen else None
        seen.add(cls)
        ax.scatter(x[0], x[1], s=18, color=colors.get(cls, "k"), label=label)
    ax.set_xlabel("x1"); ax.set_ylabel("x2")
    ax.set_title("sampled kink positions by one-sided class")
    if seen:
        ax.legend(loc="upper right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
