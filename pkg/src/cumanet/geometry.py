"""Spatial layer: truncated Poisson point processes and nearest-BS association.

A network realization pins one base station at the origin (the evaluated
receiver), draws the remaining BSs and all UEs uniformly on a truncation
disk with Poisson counts, and associates every UE with its nearest BS.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class PointSet:
    """Points of one process inside the truncation disk (meters)."""

    points: np.ndarray  # (n, 2)
    density: float
    truncation_radius: float

    def __len__(self):
        return self.points.shape[0]


@dataclass
class NetworkRealization:
    bs: PointSet
    ue: PointSet
    association: np.ndarray  # ue index -> bs index
    typical_bs_index: int = 0
    cell_membership: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def typical_cell(self) -> np.ndarray:
        """UE indices served by the origin BS."""
        return self.cell_membership.get(self.typical_bs_index, np.empty(0, dtype=int))

    def ue_distances_to_typical(self) -> np.ndarray:
        return np.hypot(self.ue.points[:, 0], self.ue.points[:, 1])


def sample_ppp(density: float, truncation_radius: float, rng: np.random.Generator) -> PointSet:
    """Draw a homogeneous PPP restricted to a disk centered at the origin.

    Poisson count first, then exact uniform placement (radius = R * sqrt(u)).
    """
    if density < 0:
        raise ValueError(f"density must be nonnegative, got {density}")
    if truncation_radius <= 0:
        raise ValueError(f"truncation radius must be positive, got {truncation_radius}")
    n = int(rng.poisson(density * np.pi * truncation_radius**2))
    radii = truncation_radius * np.sqrt(rng.random(n))
    angles = 2.0 * np.pi * rng.random(n)
    pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    return PointSet(points=pts, density=density, truncation_radius=truncation_radius)


def associate_nearest(ue_points: np.ndarray, bs_points: np.ndarray) -> np.ndarray:
    """Index of the nearest BS for every UE; ties resolve to the lowest index."""
    if bs_points.shape[0] == 0:
        raise ValueError("cannot associate against an empty BS set")
    if ue_points.shape[0] == 0:
        return np.empty(0, dtype=int)
    d2 = ((ue_points[:, None, :] - bs_points[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def build_realization(
    bs_density: float,
    ue_density: float,
    truncation_radius: float,
    rng: np.random.Generator,
) -> NetworkRealization:
    """One network draw with the evaluated BS pinned at the origin."""
    if bs_density <= 0 or ue_density <= 0:
        raise ValueError("bs_density and ue_density must be positive")
    bs_rest = sample_ppp(bs_density, truncation_radius, rng)
    bs_pts = np.vstack([np.zeros((1, 2)), bs_rest.points])
    bs = PointSet(points=bs_pts, density=bs_density, truncation_radius=truncation_radius)
    ue = sample_ppp(ue_density, truncation_radius, rng)
    assoc = associate_nearest(ue.points, bs_pts)
    membership = {
        int(b): np.flatnonzero(assoc == b) for b in np.unique(assoc)
    }
    return NetworkRealization(
        bs=bs, ue=ue, association=assoc, typical_bs_index=0, cell_membership=membership
    )


def realization_to_csv(real: NetworkRealization, path) -> None:
    """Dump one realization as (kind, index, x_m, y_m, assoc_bs) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "index", "x_m", "y_m", "assoc_bs"])
        for i, (x, y) in enumerate(real.bs.points):
            w.writerow(["bs", i, f"{x:.9g}", f"{y:.9g}", ""])
        for i, (x, y) in enumerate(real.ue.points):
            w.writerow(["ue", i, f"{x:.9g}", f"{y:.9g}", int(real.association[i])])
