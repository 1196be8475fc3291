"""Render verification figures to files.

Everything goes through the Agg backend so reports can be produced on
headless machines; matplotlib is imported lazily so the rest of the
package works without it.
"""

from __future__ import annotations

from pathlib import Path
from typing import List

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_verify_figures(outdir, field, pde_res, side_res, phi_sol) -> List[str]:
    """Write the solution surface, residual heat maps, and the profile of
    phi along omega.  Returns the written paths.

    ``pde_res`` / ``side_res`` are 2-D arrays of absolute residuals
    (side_res may be None); ``phi_sol`` is a PhiSolution.
    """
    plt = _pyplot()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    g = field.grid
    extent = [g.z_range[0], g.z_range[1], g.y_range[0], g.y_range[1]]

    def heat(values, title, fname, cmap):
        fig, ax = plt.subplots(figsize=(5.4, 4.4))
        im = ax.imshow(values, origin="lower", aspect="auto", extent=extent, cmap=cmap)
        ax.set_xlabel("z")
        ax.set_ylabel("y")
        ax.set_title(title)
        fig.colorbar(im, ax=ax)
        fig.tight_layout()
        path = outdir / fname
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(str(path))

    heat(field.values, "u(y, z)", "solution.png", "viridis")
    heat(pde_res, "|u_yz - f(y, z, u)|", "pde_residual.png", "magma")
    if side_res is not None:
        heat(side_res, "|u_y + K u_z - L|", "side_condition.png", "magma")

    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    ax.plot(phi_sol.ws, phi_sol.phis, lw=1.2, label="phi")
    ax.plot(phi_sol.ws, phi_sol.dphis, lw=1.0, ls="--", label="phi'")
    ax.axvline(phi_sol.omega0, color="gray", lw=0.8)
    ax.set_xlabel("omega")
    ax.set_title("reduced profile")
    ax.legend(loc="best")
    fig.tight_layout()
    path = outdir / "phi_profile.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(str(path))
    return written
