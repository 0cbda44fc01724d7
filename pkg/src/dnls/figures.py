"""Figure rendering for the plotdata command.

Kept separate so the heavy matplotlib import only happens when a figure is
actually requested.  `data` is the same column matrix that goes into the
.dat file, so the decay kind already arrives in log coordinates.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render(kind: str, names: list[str], data, path: str, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    x = data[:, 0]
    if kind == "decay":
        ax.plot(x, data[:, 1], label=names[1])
        ax.plot(x, data[:, 2], "--", label=names[2])
        ax.set_xlabel("log(1 + t)")
        ax.set_ylabel("log L2 norm")
    elif kind == "critical-compensated":
        ax.semilogx(1.0 + x, data[:, 2], label=names[2])
        ax.set_xlabel("1 + t")
        ax.set_ylabel("compensated L2 norm")
    elif kind == "energy":
        for j in range(1, data.shape[1]):
            ax.plot(x, data[:, j], label=names[j])
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
    elif kind == "virial":
        for j in range(1, data.shape[1]):
            ax.plot(x, data[:, j], label=names[j])
        ax.set_xlabel("t")
        ax.set_ylabel("norm")
    else:
        raise ValueError(f"unknown figure kind '{kind}'")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
