"""PNG figures written next to the JSON output of `wcf-forge solve --report`."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .assignments import Assignment  # noqa: E402
from .solvers import plan_schedule  # noqa: E402


def plot_assignment(ax, t: Assignment, terms=()) -> None:
    """Stem plot of t with the recombined weights of the terms on top."""
    ml, sl, bl = ax.stem(t.x, t.p, basefmt="k-")
    plt.setp(sl, color="0.3")
    plt.setp(ml, color="0.3", label="t")
    if terms:
        acc: dict[float, float] = {}
        for s in terms:
            a = s.term.assignment()
            for c, p in zip(a.coords, a.weights):
                acc[c] = acc.get(c, 0.0) + s.alpha * p
        xs = sorted(acc)
        ax.plot(xs, [acc[c] for c in xs], "o", mfc="none", mec="C3", ms=10, label=r"$\sum \alpha_i t_i'$")
    ax.set_xlabel("x")
    ax.set_ylabel("weight")
    ax.legend(frameon=False)


def plot_schedule(ax, case: str, n_points: int, m: int) -> None:
    """Tracked powers along the schedule; the shaded band is where moments vanish."""
    sched = plan_schedule(case, n_points, m)
    k = np.arange(len(sched.steps))
    ax.axhspan(0, n_points - 2, color="C2", alpha=0.15, lw=0)
    ax.plot(k, [s.contact_power for s in sched.steps], "o-", label="contact")
    ax.plot(k, [s.component_power for s in sched.steps], "s--", label="component")
    ax.set_xticks(k)
    ax.set_xticklabels([s.tag if len(s.tag) < 5 else "T" for s in sched.steps])
    ax.set_ylabel(r"power $\mu$")
    ax.set_title(f"{sched.case}, N = {n_points}, m = {m}", fontsize=9)
    ax.legend(frameon=False, fontsize=8)


def plot_eps_sweep(ax, solved) -> bool:
    """-min_eig(eps) against eps on log axes; returns False if nothing to draw."""
    drawn = False
    for i, s in enumerate(solved):
        sw = s.certificate.eps_sweep
        if not sw:
            continue
        e = np.array([a for a, _ in sw])
        v = np.maximum(np.array([-b for _, b in sw]), 1e-18)
        ax.loglog(e, v, "o-", label=f"term {i}")
        drawn = True
    if drawn:
        e = np.geomspace(1e-4, 1e-2, 8)
        ax.loglog(e, 100 * e, "k:", label=r"$100\,\epsilon$")
        ax.set_xlabel(r"$\epsilon$")
        ax.set_ylabel(r"$-\lambda_{min}$")
        ax.legend(frameon=False, fontsize=8)
    return drawn


def write_report(out_dir, stem: str, t: Assignment, solved: Sequence) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(5, 3.5))
    plot_assignment(ax, t, solved)
    p = out_dir / f"{stem}_assignment.png"
    fig.tight_layout()
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    direct = [s for s in solved if not (s.certificate.case or "").startswith("transpose(")]
    if direct:
        fig, axes = plt.subplots(len(direct), 1, figsize=(6, 2.6 * len(direct)), squeeze=False)
        for ax, s in zip(axes[:, 0], direct):
            plot_schedule(ax, s.certificate.case, len(s.term.subset), s.term.power)
        fig.tight_layout()
        p = out_dir / f"{stem}_schedule.png"
        fig.savefig(p, dpi=120)
        plt.close(fig)
        paths.append(p)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    if plot_eps_sweep(ax, solved):
        fig.tight_layout()
        p = out_dir / f"{stem}_eps_sweep.png"
        fig.savefig(p, dpi=120)
        paths.append(p)
    plt.close(fig)
    return paths
