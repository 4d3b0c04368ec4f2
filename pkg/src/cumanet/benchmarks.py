"""Reference receivers: zero-forcing, full-CSI MMSE, and a greedy
antenna-position optimizer (JAPBO) used as an upper-bound comparison.

All three operate on a fixed budget of active antennas equal to the RF
chain count.  ZF and MMSE use an evenly strided subset of the port grid
so every scheme shares one channel model; JAPBO instead searches over
port positions with first-improvement moves and re-derives the MMSE
combiner after every accepted move.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import PortGrid


class SingularChannelError(np.linalg.LinAlgError):
    """Scheduled channel matrix is rank deficient; the draw must be skipped."""


@dataclass
class BeamformerSet:
    vectors: np.ndarray  # (n_active, n_served) combiner columns
    antenna_positions: np.ndarray  # active port indices
    scheme: str
    diagonally_loaded: bool = False
    objective_trace: list = field(default_factory=list)


def strided_antenna_subset(grid: PortGrid, count: int) -> np.ndarray:
    """Evenly strided active-antenna positions on the port grid.

    The count factors into a sub-grid as square as possible, each side
    spread evenly across the corresponding port dimension.
    """
    if not (1 <= count <= grid.n_ports):
        raise ValueError(f"need 1 <= count <= {grid.n_ports}, got {count}")
    best = None
    for a in range(1, count + 1):
        if count % a:
            continue
        b = count // a
        if a <= grid.n1 and b <= grid.n2:
            if best is None or abs(a - b) < abs(best[0] - best[1]):
                best = (a, b)
    if best is None:
        # count has no factor pair fitting the grid; fall back to a flat stride
        return np.unique(np.round(np.linspace(0, grid.n_ports - 1, count)).astype(int))
    rows = np.round(np.linspace(0, grid.n1 - 1, best[0])).astype(int)
    cols = np.round(np.linspace(0, grid.n2 - 1, best[1])).astype(int)
    idx = np.array([grid.flat_index(r, c) for r in rows for c in cols])
    return np.unique(idx)


def zf_receiver(in_cell_channels: np.ndarray) -> BeamformerSet:
    """Zero-forcing combiners from the pseudo-inverse of the channel matrix.

    ``in_cell_channels`` has one column per scheduled UE, restricted to the
    active antennas.  Column u of the result is orthogonal to every other
    scheduled channel.
    """
    h = np.asarray(in_cell_channels)
    n_active, n_ue = h.shape
    if n_ue > n_active:
        raise SingularChannelError(
            f"{n_ue} scheduled UEs exceed {n_active} active antennas"
        )
    svals = np.linalg.svd(h, compute_uv=False)
    if svals[-1] < 1e-12 * svals[0]:
        raise SingularChannelError("scheduled channel matrix is rank deficient")
    pinv = np.linalg.pinv(h)
    return BeamformerSet(
        vectors=pinv.conj().T,
        antenna_positions=np.arange(n_active),
        scheme="zf",
    )


def mmse_receiver(
    in_cell: np.ndarray,
    out_cell: np.ndarray,
    desired_index: int,
) -> tuple[np.ndarray, bool]:
    """Full-CSI MMSE combiner for one UE.

    The Gram matrix aggregates every channel the receiver sees (in-cell
    columns plus out-of-cell columns); a singular Gram gets diagonal
    loading of 1e-10 * trace / n and the flag reports it.
    """
    h_in = np.asarray(in_cell)
    if h_in.ndim != 2:
        raise ValueError("in_cell must be (n_active, n_ue) with one column per UE")
    gram = h_in @ h_in.conj().T
    if out_cell is not None and np.size(out_cell):
        h_out = np.asarray(out_cell)
        if h_out.ndim != 2:
            raise ValueError("out_cell must be (n_active, n_ue) with one column per UE")
        gram = gram + h_out @ h_out.conj().T
    n = gram.shape[0]
    desired = h_in[:, desired_index]
    loaded = False
    svals = np.linalg.svd(gram, compute_uv=False, hermitian=True)
    if svals[-1] < 1e-12 * svals[0]:
        # singular Gram admits a whole solution family; the diagonal load
        # pins the minimum-norm one
        loaded = True
        gram = gram + (1e-10 * np.trace(gram).real / n) * np.eye(n)
    w = np.linalg.solve(gram, desired)
    return w, loaded


def combiner_sir(w: np.ndarray, channels: np.ndarray, desired_row: int) -> float:
    """SIR of one combiner against every channel row (desired row excluded
    from the interference sum)."""
    z = np.abs(channels @ w.conj()) ** 2
    desired = z[desired_row]
    interference = z.sum() - desired
    if interference <= 0.0:
        return np.inf
    return float(desired / interference)


def _mmse_objective(
    channels_active: np.ndarray, served_rows: np.ndarray
) -> tuple[float, np.ndarray]:
    """Sum of served-UE SIRs under per-UE MMSE combining on these antennas."""
    gram = channels_active.T @ channels_active.conj()
    n = gram.shape[0]
    try:
        winv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        winv = np.linalg.inv(gram + (1e-10 * np.trace(gram).real / n) * np.eye(n))
    total = 0.0
    combiners = np.empty((n, len(served_rows)), dtype=complex)
    for j, row in enumerate(served_rows):
        w = winv @ channels_active[row]
        combiners[:, j] = w
        total += combiner_sir(w, channels_active, row)
    return total, combiners


def japbo_optimize(
    candidate_grid: PortGrid,
    all_channels: np.ndarray,
    served_rows: np.ndarray,
    k_rf: int,
    rng: np.random.Generator,
    max_sweeps: int = 50,
) -> BeamformerSet:
    """Greedy antenna-position search with MMSE combining.

    Starts from a random placement of ``k_rf`` distinct ports; antennas are
    visited in index order, their four grid neighbors examined in a fixed
    (up, down, left, right) order, and the first move that improves the
    summed served-UE SIR is accepted.  Stops after a full sweep without an
    accepted move or after ``max_sweeps``.
    """
    n_ports = candidate_grid.n_ports
    if not (1 <= k_rf <= n_ports):
        raise ValueError(f"need 1 <= k_rf <= {n_ports}, got {k_rf}")
    served_rows = np.asarray(served_rows, dtype=int)
    positions = rng.permutation(n_ports)[:k_rf].astype(int)
    objective, combiners = _mmse_objective(all_channels[:, positions], served_rows)
    trace = [objective]
    occupied = set(int(p) for p in positions)
    for _ in range(max_sweeps):
        moved = False
        for slot in range(k_rf):
            r, c = candidate_grid.grid_index(int(positions[slot]))
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                nr, nc = r + dr, c + dc
                if not (0 <= nr < candidate_grid.n1 and 0 <= nc < candidate_grid.n2):
                    continue
                cand = candidate_grid.flat_index(nr, nc)
                if cand in occupied:
                    continue
                trial = positions.copy()
                trial[slot] = cand
                obj, comb = _mmse_objective(all_channels[:, trial], served_rows)
                if obj > objective:
                    occupied.discard(int(positions[slot]))
                    occupied.add(int(cand))
                    positions = trial
                    objective, combiners = obj, comb
                    trace.append(objective)
                    moved = True
                    break
        if not moved:
            break
    return BeamformerSet(
        vectors=combiners,
        antenna_positions=positions,
        scheme="japbo",
        objective_trace=trace,
    )
