"""Sign-aligned port selection and combining.

The receiver splits ports by the sign of the desired channel's real part,
activates whichever group has the larger absolute real-part sum, and
combines the selected ports by plain summation (unit weights).  Ports
with a zero real part count as positive so the rule is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelVector


@dataclass
class SelectionVector:
    mask: np.ndarray  # boolean, one flag per port
    chosen_sign: str  # "plus" or "minus"

    @property
    def selected_count(self) -> int:
        return int(self.mask.sum())


@dataclass
class SinrBreakdown:
    desired_power: float
    intra_cell_power: float
    inter_cell_power: float
    noise_power: float
    sinr: float
    sir: float


def partition_ports(h_small: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split port indices by the sign of the real part (zero goes to plus)."""
    re = np.real(np.asarray(h_small))
    plus = np.flatnonzero(re >= 0)
    minus = np.flatnonzero(re < 0)
    return plus, minus


def select_set(h_small: np.ndarray) -> SelectionVector:
    """Choose the sign group with the larger absolute real-part sum.

    A tie goes to the plus group.
    """
    re = np.real(np.asarray(h_small))
    plus_mask = re >= 0
    sum_plus = re[plus_mask].sum()
    sum_minus = -re[~plus_mask].sum()
    if sum_plus >= sum_minus:
        return SelectionVector(mask=plus_mask, chosen_sign="plus")
    return SelectionVector(mask=~plus_mask, chosen_sign="minus")


def union_activation(selections: list[SelectionVector]) -> np.ndarray:
    """Elementwise OR of per-UE masks: the ports the hardware must activate."""
    if not selections:
        raise ValueError("need at least one selection")
    n = len(selections[0].mask)
    out = np.zeros(n, dtype=bool)
    for s in selections:
        if len(s.mask) != n:
            raise ValueError("selection masks disagree on port count")
        out |= s.mask
    return out


def _combined_power(mask: np.ndarray, per_port: np.ndarray) -> float:
    return float(np.abs(per_port[mask].sum()) ** 2)


def evaluate_sinr(
    w: SelectionVector,
    desired: ChannelVector,
    intra: list[ChannelVector],
    inter: list[ChannelVector],
    noise_power: float = 0.0,
) -> SinrBreakdown:
    """Combiner-output powers for one UE under a fixed selection mask.

    The combiner applies unit weights on the selected ports, so the noise
    contribution is selected_count * noise_power.
    """
    if noise_power < 0:
        raise ValueError("noise power must be nonnegative")
    n = len(w.mask)
    for ch in [desired, *intra, *inter]:
        if len(ch.per_port) != n:
            raise ValueError("channel length does not match the selection mask")
    desired_power = _combined_power(w.mask, desired.per_port)
    intra_power = sum(_combined_power(w.mask, ch.per_port) for ch in intra)
    inter_power = sum(_combined_power(w.mask, ch.per_port) for ch in inter)
    noise = w.selected_count * noise_power
    interference = intra_power + inter_power
    sinr = desired_power / (interference + noise) if interference + noise > 0 else np.inf
    sir = desired_power / interference if interference > 0 else np.inf
    return SinrBreakdown(
        desired_power=desired_power,
        intra_cell_power=intra_power,
        inter_cell_power=inter_power,
        noise_power=noise,
        sinr=float(sinr),
        sir=float(sir),
    )
