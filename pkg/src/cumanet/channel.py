"""Fluid-antenna port grid, spatial correlation, and channel sampling.

Ports live on an n1 x n2 grid spanning a w1 x w2 aperture measured in
carrier wavelengths.  The correlation between two ports is the Bessel J0
kernel of their normalized separation; small-scale channels are proper
complex Gaussians with that correlation, scaled by r^(-eta) path loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import bessel_j0

EIG_CLAMP = 1e-10


def _most_square_factors(n: int) -> tuple[int, int]:
    best = (1, n)
    for a in range(1, int(math.isqrt(n)) + 1):
        if n % a == 0:
            best = (a, n // a)
    return best


@dataclass(frozen=True)
class PortGrid:
    """Port layout: n1 x n2 positions over a w1 x w2 wavelength aperture."""

    n1: int
    n2: int
    w1: float
    w2: float

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("port counts must be >= 1")
        if self.w1 <= 0 or self.w2 <= 0:
            raise ValueError("aperture sides must be positive")

    @classmethod
    def from_total(cls, n_ports: int, w1: float, w2: float | None = None) -> "PortGrid":
        """Most-square factorization of a total port count (n1 <= n2)."""
        n1, n2 = _most_square_factors(n_ports)
        return cls(n1=n1, n2=n2, w1=w1, w2=w1 if w2 is None else w2)

    @property
    def n_ports(self) -> int:
        return self.n1 * self.n2

    def flat_index(self, i1: int, i2: int) -> int:
        return i1 * self.n2 + i2

    def grid_index(self, k: int) -> tuple[int, int]:
        return divmod(k, self.n2)

    def port_offsets_wavelengths(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-port normalized coordinates along each aperture dimension.

        A dimension with a single port spans zero aperture, so its offset
        is defined as 0.
        """
        i1, i2 = np.meshgrid(np.arange(self.n1), np.arange(self.n2), indexing="ij")
        c1 = i1.ravel() / (self.n1 - 1) * self.w1 if self.n1 > 1 else np.zeros(self.n_ports)
        c2 = i2.ravel() / (self.n2 - 1) * self.w2 if self.n2 > 1 else np.zeros(self.n_ports)
        return c1, c2


def correlation_entry(grid: PortGrid, k: int, m: int) -> float:
    """J0 correlation between two ports, from their aperture separation."""
    n = grid.n_ports
    if not (0 <= k < n and 0 <= m < n):
        raise IndexError(f"port index out of range for {n} ports")
    if k == m:
        return 1.0
    c1, c2 = grid.port_offsets_wavelengths()
    sep = math.hypot(c1[k] - c1[m], c2[k] - c2[m])
    return bessel_j0(2.0 * math.pi * sep)


@dataclass
class CorrelationMatrix:
    """J0-kernel port correlation with a clamped square-root factor.

    The kernel matrix is only positive semidefinite in the continuum
    limit; tiny negative eigenvalues from the discrete grid are clamped
    to zero and counted for audit.
    """

    entries: np.ndarray
    sqrt_factor: np.ndarray
    clamped_eigs: int

    @property
    def n_ports(self) -> int:
        return self.entries.shape[0]


def build_correlation(grid: PortGrid) -> CorrelationMatrix:
    c1, c2 = grid.port_offsets_wavelengths()
    d1 = c1[:, None] - c1[None, :]
    d2 = c2[:, None] - c2[None, :]
    sep = 2.0 * np.pi * np.hypot(d1, d2)
    uniq, inverse = np.unique(sep, return_inverse=True)
    kernel = np.array([bessel_j0(float(x)) for x in uniq])
    entries = kernel[inverse].reshape(sep.shape)
    np.fill_diagonal(entries, 1.0)
    try:
        eigvals, eigvecs = np.linalg.eigh(entries)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("correlation eigendecomposition failed") from exc
    clamped = int((eigvals < EIG_CLAMP).sum())
    eigvals = np.where(eigvals < EIG_CLAMP, 0.0, eigvals)
    sqrt_factor = eigvecs * np.sqrt(eigvals)
    return CorrelationMatrix(entries=entries, sqrt_factor=sqrt_factor, clamped_eigs=clamped)


@dataclass
class ChannelVector:
    """One UE-to-BS link: per-port complex gains with large-scale path loss."""

    per_port: np.ndarray
    path_loss: float
    distance_m: float
    owner_ue: int = -1


def sample_small_scale(corr: CorrelationMatrix, n_links: int, rng: np.random.Generator) -> np.ndarray:
    """(n_links, n_ports) proper complex Gaussians with port covariance J.

    Real and imaginary parts each carry covariance J/2, so every port has
    unit complex variance.
    """
    n = corr.n_ports
    g_re = rng.standard_normal((n_links, n))
    g_im = rng.standard_normal((n_links, n))
    a_t = corr.sqrt_factor.T
    return (g_re @ a_t + 1j * (g_im @ a_t)) / np.sqrt(2.0)


def sample_channel(
    corr: CorrelationMatrix,
    distance_m: float,
    eta: float,
    rng: np.random.Generator,
    owner_ue: int = -1,
) -> ChannelVector:
    """Draw one correlated channel with r^(-eta) path loss."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    path_loss = distance_m ** (-eta)
    small = sample_small_scale(corr, 1, rng)[0]
    return ChannelVector(
        per_port=np.sqrt(path_loss) * small,
        path_loss=path_loss,
        distance_m=distance_m,
        owner_ue=owner_ue,
    )
