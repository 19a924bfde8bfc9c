"""Per-user normalization and subarray/topology selection.

Normalization rescales each user so its total energy over all snapshots and
subcarriers equals M*L*T, removing large-scale gain imbalance between users
while keeping every relative variation across antennas, subcarriers, and
snapshots. Selection slices an (M_sub = W*N)-antenna subarray out of a full
tensor by drawing N access points and W elements per AP uniformly at random.
Selection never renormalizes: a subarray keeps exactly the energy its
antennas captured, which is the point of comparing topologies fairly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ApCapacityError,
    DegenerateUserError,
    InvalidInputError,
    TopologyError,
)
from .tensor import ChannelTensor, RngHandle


@dataclass(frozen=True)
class Topology:
    """Record of one subarray selection: which APs, which elements.

    n_aps * per_ap_antennas equals the subarray antenna count. Element ids
    are positions within each chosen AP's own antenna block.
    """

    n_aps: int
    per_ap_antennas: int
    chosen_ap_ids: tuple
    chosen_element_ids: tuple

    def __post_init__(self):
        n = int(self.n_aps)
        w = int(self.per_ap_antennas)
        if n < 1 or w < 1:
            raise InvalidInputError("n_aps and per_ap_antennas must be >= 1")
        aps = tuple(int(a) for a in self.chosen_ap_ids)
        if len(aps) != n or len(set(aps)) != n:
            raise InvalidInputError("chosen_ap_ids must be n_aps distinct ids")
        elements = tuple(tuple(int(e) for e in grp) for grp in self.chosen_element_ids)
        if len(elements) != n:
            raise InvalidInputError("chosen_element_ids must give one group per AP")
        for grp in elements:
            if len(grp) != w or len(set(grp)) != w:
                raise InvalidInputError(
                    "each AP's element ids must be per_ap_antennas distinct indices"
                )
        object.__setattr__(self, "n_aps", n)
        object.__setattr__(self, "per_ap_antennas", w)
        object.__setattr__(self, "chosen_ap_ids", aps)
        object.__setattr__(self, "chosen_element_ids", elements)

    @property
    def total_antennas(self) -> int:
        return self.n_aps * self.per_ap_antennas


@dataclass(frozen=True)
class NormalizedTensor(ChannelTensor):
    """A ChannelTensor whose per-user energy equals M*L*T.

    `user_scales` records the positive scalar applied to each user's
    coefficients.
    """

    user_scales: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        scales = np.array(self.user_scales, dtype=float, copy=True)
        if scales.ndim != 1 or scales.shape[0] != self.num_users:
            raise InvalidInputError("user_scales must give one factor per user")
        if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
            raise InvalidInputError("user_scales must be positive and finite")
        scales.setflags(write=False)
        object.__setattr__(self, "user_scales", scales)


def normalize(ch: ChannelTensor) -> NormalizedTensor:
    """Rescale each user so its energy over all (t, l, m) equals M*L*T.

    One positive scalar per user; relative gains within a user are untouched.
    Raises DegenerateUserError for an all-zero user channel.
    """
    if not isinstance(ch, ChannelTensor):
        raise InvalidInputError("normalize expects a ChannelTensor")
    t, l, k, m = ch.dims
    energies = np.sum(np.abs(ch.data) ** 2, axis=(0, 1, 3))
    if np.any(energies == 0.0):
        bad = int(np.flatnonzero(energies == 0.0)[0])
        raise DegenerateUserError(
            f"user {bad} has an all-zero channel and cannot be normalized",
            user=bad,
        )
    scales = np.sqrt(m * l * t / energies)
    data = ch.data * scales[None, None, :, None]
    return NormalizedTensor(data, ch.antenna_ap_map, user_scales=scales)


def select_subarray(ch: ChannelTensor, m_total: int, n_aps: int, rng) -> tuple:
    """Slice a random W*N-antenna subarray out of `ch`.

    Draws `n_aps` access points uniformly without replacement, then
    W = m_total / n_aps elements uniformly without replacement inside each
    chosen AP. Returns (sliced ChannelTensor, Topology). No renormalization
    happens here; the slice keeps the original coefficients.
    """
    if not isinstance(ch, ChannelTensor):
        raise InvalidInputError("select_subarray expects a ChannelTensor")
    m_total = int(m_total)
    n_aps = int(n_aps)
    available = ch.ap_ids
    if n_aps < 1 or n_aps > len(available):
        raise TopologyError(
            f"requested {n_aps} APs but the tensor has {len(available)}"
        )
    if m_total < 1 or m_total % n_aps != 0:
        raise TopologyError(
            f"m_total={m_total} is not divisible by n_aps={n_aps}"
        )
    w = m_total // n_aps
    group_sizes = {
        ap: int(np.count_nonzero(ch.antenna_ap_map == ap)) for ap in available
    }
    smallest = min(group_sizes.values())
    if w > smallest:
        raise ApCapacityError(
            f"need W={w} elements per AP but the smallest AP has {smallest}"
        )
    if isinstance(rng, RngHandle):
        gen = rng.generator()
    elif isinstance(rng, np.random.Generator):
        gen = rng
    else:
        raise InvalidInputError("rng must be an RngHandle or numpy Generator")

    chosen = np.sort(gen.choice(np.asarray(available), size=n_aps, replace=False))
    columns = []
    element_groups = []
    for ap in chosen:
        block = np.flatnonzero(ch.antenna_ap_map == ap)
        picks = np.sort(gen.choice(len(block), size=w, replace=False))
        columns.append(block[picks])
        element_groups.append(tuple(int(e) for e in picks))
    cols = np.concatenate(columns)
    topo = Topology(
        n_aps=n_aps,
        per_ap_antennas=w,
        chosen_ap_ids=tuple(int(a) for a in chosen),
        chosen_element_ids=tuple(element_groups),
    )
    sliced = ChannelTensor(ch.data[:, :, :, cols], ch.antenna_ap_map[cols])
    return sliced, topo
