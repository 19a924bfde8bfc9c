"""Synthetic distributed-MIMO channel generation.

Two generators: an i.i.d. Rayleigh baseline, and a geometric scene model with
access points carrying half-wavelength planar antenna patches, users placed
in a rectangular region, and a per-AP propagation condition. A LoS link mixes
a deterministic plane wave (set by the Ricean K-factor) with scattered rays;
an NLoS link is scattered rays only. Either way the mean link power is 1, so
per-user normalization downstream only removes large-scale imbalance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    InfeasibleLayoutError,
    InvalidInputError,
    PlacementError,
)
from .tensor import ChannelTensor, RngHandle

SPEED_OF_LIGHT = 299_792_458.0

LOS = "los"
NLOS = "nlos"

# rejection budget for constrained user placement
_MAX_PLACEMENT_REJECTS = 100_000


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngHandle):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise InvalidInputError("rng must be an RngHandle or numpy Generator")


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle for user placement, at a fixed height.

    `origin` is the (x, y, z) corner; the region spans `width` along x and
    `depth` along y at height origin[2].
    """

    origin: tuple[float, float, float]
    width: float
    depth: float

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        if len(origin) != 3 or not all(math.isfinite(v) for v in origin):
            raise InvalidInputError("region origin must be a finite (x, y, z) triple")
        if not (self.width > 0 and self.depth > 0):
            raise InvalidInputError("region must have positive width and depth")
        if not (math.isfinite(self.width) and math.isfinite(self.depth)):
            raise InvalidInputError("region extents must be finite")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "depth", float(self.depth))

    @property
    def area(self) -> float:
        return self.width * self.depth

    def contains(self, points) -> np.ndarray:
        """Boolean mask: which (x, y, z) rows lie inside the rectangle."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x0, y0, _ = self.origin
        return (
            (p[:, 0] >= x0)
            & (p[:, 0] <= x0 + self.width)
            & (p[:, 1] >= y0)
            & (p[:, 1] <= y0 + self.depth)
        )


@dataclass(frozen=True)
class Scene:
    """Geometric description of the access points and the propagation model.

    Parameters
    ----------
    ap_positions : sequence of (x, y, z)
        One entry per access point, meters.
    antennas_per_ap : int
        Elements per AP, laid out as a half-wavelength planar patch.
    region : Region
        Rectangle users may occupy.
    condition_per_ap : sequence of "los" / "nlos"
        Propagation condition of every AP towards the region.
    rice_k_db : float
        Ricean K-factor for LoS links, dB.
    num_scatterers : int
        Scattered rays per AP-user link.
    angular_spread_deg : float
        Azimuth spread of scatterer directions around the direct path.
    carrier_hz, bandwidth_hz : float
        Center frequency and total bandwidth of the subcarrier grid.
    num_subcarriers, num_snapshots : int
        L and T of generated tensors. Snapshots redraw scatterer gains.
    """

    ap_positions: tuple
    antennas_per_ap: int
    region: Region
    condition_per_ap: tuple
    rice_k_db: float
    num_scatterers: int
    angular_spread_deg: float
    carrier_hz: float
    bandwidth_hz: float
    num_subcarriers: int = 1
    num_snapshots: int = 1

    def __post_init__(self):
        positions = tuple(tuple(float(c) for c in p) for p in self.ap_positions)
        if len(positions) < 1:
            raise InvalidInputError("scene needs at least one access point")
        if any(len(p) != 3 or not all(math.isfinite(c) for c in p) for p in positions):
            raise InvalidInputError("ap_positions must be finite (x, y, z) triples")
        conditions = tuple(str(c).lower() for c in self.condition_per_ap)
        if len(conditions) != len(positions):
            raise InvalidInputError(
                "condition_per_ap must give one tag per access point"
            )
        if any(c not in (LOS, NLOS) for c in conditions):
            raise InvalidInputError("condition tags must be 'los' or 'nlos'")
        if not isinstance(self.region, Region):
            raise InvalidInputError("region must be a Region")
        if int(self.antennas_per_ap) < 1:
            raise InvalidInputError("antennas_per_ap must be >= 1")
        if not math.isfinite(float(self.rice_k_db)):
            raise InvalidInputError("rice_k_db must be finite")
        if int(self.num_scatterers) < 1:
            raise InvalidInputError("num_scatterers must be >= 1")
        if not 0.0 < float(self.angular_spread_deg) <= 360.0:
            raise InvalidInputError("angular_spread_deg must be in (0, 360]")
        if not (float(self.carrier_hz) > 0 and math.isfinite(float(self.carrier_hz))):
            raise InvalidInputError("carrier_hz must be positive and finite")
        if not (float(self.bandwidth_hz) >= 0 and math.isfinite(float(self.bandwidth_hz))):
            raise InvalidInputError("bandwidth_hz must be non-negative and finite")
        if int(self.num_subcarriers) < 1 or int(self.num_snapshots) < 1:
            raise InvalidInputError("num_subcarriers and num_snapshots must be >= 1")
        object.__setattr__(self, "ap_positions", positions)
        object.__setattr__(self, "antennas_per_ap", int(self.antennas_per_ap))
        object.__setattr__(self, "condition_per_ap", conditions)
        object.__setattr__(self, "rice_k_db", float(self.rice_k_db))
        object.__setattr__(self, "num_scatterers", int(self.num_scatterers))
        object.__setattr__(self, "angular_spread_deg", float(self.angular_spread_deg))
        object.__setattr__(self, "carrier_hz", float(self.carrier_hz))
        object.__setattr__(self, "bandwidth_hz", float(self.bandwidth_hz))
        object.__setattr__(self, "num_subcarriers", int(self.num_subcarriers))
        object.__setattr__(self, "num_snapshots", int(self.num_snapshots))

    @property
    def num_aps(self) -> int:
        return len(self.ap_positions)

    @property
    def total_antennas(self) -> int:
        return self.num_aps * self.antennas_per_ap

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    def subcarrier_frequencies(self) -> np.ndarray:
        """L frequencies uniform across the bandwidth, centered at the carrier."""
        l = self.num_subcarriers
        if l == 1:
            return np.array([self.carrier_hz])
        offsets = (np.arange(l) / (l - 1) - 0.5) * self.bandwidth_hz
        return self.carrier_hz + offsets

    def antenna_positions(self) -> np.ndarray:
        """(M, 3) element coordinates: a half-wavelength grid patch per AP.

        Each patch is vertical (local x horizontal, z up), centered on the
        AP position, with rows x columns chosen as the most square factor
        pair of antennas_per_ap.
        """
        w = self.antennas_per_ap
        rows = int(math.floor(math.sqrt(w)))
        while w % rows != 0:
            rows -= 1
        cols = w // rows
        spacing = 0.5 * self.wavelength_m
        ix = (np.arange(cols) - (cols - 1) / 2.0) * spacing
        iz = (np.arange(rows) - (rows - 1) / 2.0) * spacing
        dx, dz = np.meshgrid(ix, iz)
        offsets = np.column_stack(
            [dx.ravel(), np.zeros(w), dz.ravel()]
        )
        out = np.empty((self.total_antennas, 3))
        for n, ap in enumerate(self.ap_positions):
            out[n * w : (n + 1) * w] = np.asarray(ap) + offsets
        return out

    def antenna_ap_map(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_aps), self.antennas_per_ap)


@dataclass(frozen=True)
class UserLayout:
    """K user positions with pairwise spacing bounds.

    Positions are (x, y, z) meters; every pairwise distance must lie within
    [min_spacing_m, max_spacing_m].
    """

    positions: np.ndarray
    min_spacing_m: float = 0.0
    max_spacing_m: float = math.inf

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, copy=True)
        pos = np.atleast_2d(pos)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise InvalidInputError("positions must be a (K, 3) coordinate array")
        if not np.all(np.isfinite(pos)):
            raise InvalidInputError("user positions must be finite")
        min_s = float(self.min_spacing_m)
        max_s = float(self.max_spacing_m)
        if min_s < 0 or not max_s > 0 or min_s > max_s:
            raise InvalidInputError(
                "need 0 <= min_spacing_m <= max_spacing_m and max_spacing_m > 0"
            )
        if pos.shape[0] > 1:
            diffs = pos[:, None, :] - pos[None, :, :]
            dist = np.sqrt((diffs**2).sum(axis=2))
            pair = dist[np.triu_indices(pos.shape[0], k=1)]
            if np.any(pair < min_s) or np.any(pair > max_s):
                raise PlacementError(
                    "pairwise user distances violate the spacing bounds "
                    f"[{min_s}, {max_s}]"
                )
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "min_spacing_m", min_s)
        object.__setattr__(self, "max_spacing_m", max_s)

    @property
    def num_users(self) -> int:
        return self.positions.shape[0]


def default_scene(
    condition: str = LOS,
    *,
    num_subcarriers: int = 1,
    num_snapshots: int = 1,
    rice_k_db: float = 9.0,
    num_scatterers: int = 24,
) -> Scene:
    """A compact indoor scene: 4 corner APs around a 2.5 m x 5 m region.

    `condition` is "los" (all APs LoS, 37 deg spread), "nlos" (all NLoS,
    64 deg spread), or "mixed" (two LoS + two NLoS APs, 64 deg spread).
    """
    region = Region(origin=(0.0, 0.0, 0.8), width=2.5, depth=5.0)
    aps = (
        (-0.5, -0.5, 2.0),
        (3.0, -0.5, 2.0),
        (-0.5, 5.5, 2.0),
        (3.0, 5.5, 2.0),
    )
    condition = condition.lower()
    if condition == LOS:
        tags = (LOS, LOS, LOS, LOS)
        spread = 37.0
    elif condition == NLOS:
        tags = (NLOS, NLOS, NLOS, NLOS)
        spread = 64.0
    elif condition == "mixed":
        tags = (LOS, LOS, NLOS, NLOS)
        spread = 64.0
    else:
        raise InvalidInputError("condition must be 'los', 'nlos', or 'mixed'")
    return Scene(
        ap_positions=aps,
        antennas_per_ap=32,
        region=region,
        condition_per_ap=tags,
        rice_k_db=rice_k_db,
        num_scatterers=num_scatterers,
        angular_spread_deg=spread,
        carrier_hz=5.6e9,
        bandwidth_hz=400e6,
        num_subcarriers=num_subcarriers,
        num_snapshots=num_snapshots,
    )


def gen_iid_rayleigh(dims, rng) -> ChannelTensor:
    """Tensor of i.i.d. circularly-symmetric complex Gaussian entries.

    Zero mean, unit variance per entry; all antennas map to one AP since the
    draw carries no geometry.
    """
    try:
        t, l, k, m = (int(v) for v in dims)
    except (TypeError, ValueError):
        raise DimensionError("dims must be four integers (T, L, K, M)") from None
    if min(t, l, k, m) < 1:
        raise DimensionError(f"all dims must be >= 1, got {(t, l, k, m)}")
    gen = _generator(rng)
    shape = (t, l, k, m)
    data = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / math.sqrt(2.0)
    return ChannelTensor(data, np.zeros(m, dtype=np.int64))


def gen_trajectory_users(scene: Scene, num_users: int, spacing=(0.1, 5.0), rng=None) -> UserLayout:
    """Draw K user positions uniformly in the scene region.

    Positions are accepted only when every pairwise distance lies within
    `spacing` = (min_m, max_m); after 1e5 rejected candidates the layout is
    declared infeasible.
    """
    num_users = int(num_users)
    if num_users < 1:
        raise InvalidInputError("num_users must be >= 1")
    min_s, max_s = (float(spacing[0]), float(spacing[1]))
    if min_s < 0 or not max_s > 0 or min_s > max_s:
        raise InvalidInputError(
            "spacing must satisfy 0 <= min <= max with max > 0"
        )
    gen = _generator(rng)
    region = scene.region
    x0, y0, z0 = region.origin
    accepted: list[np.ndarray] = []
    rejects = 0
    while len(accepted) < num_users:
        u, v = gen.random(2)
        cand = np.array([x0 + u * region.width, y0 + v * region.depth, z0])
        ok = True
        for p in accepted:
            d = float(np.linalg.norm(cand - p))
            if d < min_s or d > max_s:
                ok = False
                break
        if ok:
            accepted.append(cand)
        else:
            rejects += 1
            if rejects >= _MAX_PLACEMENT_REJECTS:
                raise InfeasibleLayoutError(
                    f"could not place {num_users} users with spacing "
                    f"[{min_s}, {max_s}] m in a {region.width} x {region.depth} m "
                    f"region after {_MAX_PLACEMENT_REJECTS} rejected candidates"
                )
    return UserLayout(np.array(accepted), min_spacing_m=min_s, max_spacing_m=max_s)


def gen_geometric(scene: Scene, users: UserLayout, rng=None) -> ChannelTensor:
    """Synthesize a (T, L, K, M) tensor from the scene geometry.

    Per AP-user link: `num_scatterers` single-bounce rays with complex
    Gaussian gains (redrawn each snapshot) leave the AP within
    angular_spread_deg of the direct azimuth; a LoS AP adds the deterministic
    plane wave with power ratio set by rice_k_db. Each ray's phase comes from
    its exact path length per subcarrier frequency, so the array geometry,
    frequency selectivity, and AP-position diversity are all in the tensor.
    Mean link power is 1.
    """
    if not isinstance(users, UserLayout):
        raise InvalidInputError("users must be a UserLayout")
    inside = scene.region.contains(users.positions)
    if not np.all(inside):
        bad = int(np.flatnonzero(~inside)[0])
        raise PlacementError(f"user {bad} lies outside the scene region")
    gen = _generator(rng)

    t_dim = scene.num_snapshots
    l_dim = scene.num_subcarriers
    k_dim = users.num_users
    w = scene.antennas_per_ap
    s = scene.num_scatterers

    freqs = scene.subcarrier_frequencies()
    ant_pos = scene.antenna_positions()
    rice_linear = 10.0 ** (scene.rice_k_db / 10.0)
    los_amp = math.sqrt(rice_linear / (rice_linear + 1.0))
    scatter_power_los = 1.0 / (rice_linear + 1.0)
    half_spread = math.radians(scene.angular_spread_deg) / 2.0
    two_pi_over_c = 2.0 * math.pi / SPEED_OF_LIGHT

    data = np.zeros((t_dim, l_dim, k_dim, scene.total_antennas), dtype=np.complex128)
    for k in range(k_dim):
        user = users.positions[k]
        for n, ap in enumerate(scene.ap_positions):
            ap = np.asarray(ap)
            cols = slice(n * w, (n + 1) * w)
            elements = ant_pos[cols]
            direct = user - ap
            azimuth = math.atan2(direct[1], direct[0])
            link_dist = float(np.linalg.norm(direct))

            # scatterer points: direct-azimuth fan at a fraction of the link range
            angles = azimuth + gen.uniform(-half_spread, half_spread, s)
            ranges = gen.uniform(0.2, 1.0, s) * max(link_dist, 1e-3)
            scat = ap + np.column_stack(
                [np.cos(angles) * ranges, np.sin(angles) * ranges, np.zeros(s)]
            )
            gains = (
                gen.standard_normal((t_dim, s)) + 1j * gen.standard_normal((t_dim, s))
            ) / math.sqrt(2.0 * s)

            # per-ray path length: AP element -> scatterer -> user
            d_elem = np.linalg.norm(scat[:, None, :] - elements[None, :, :], axis=2)
            d_user = np.linalg.norm(scat - user[None, :], axis=1)
            paths = d_elem + d_user[:, None]
            phases = np.exp(1j * two_pi_over_c * freqs[:, None, None] * paths[None, :, :])
            scattered = np.einsum("ts,lsw->tlw", gains, phases)

            if scene.condition_per_ap[n] == LOS:
                d_los = np.linalg.norm(elements - user[None, :], axis=1)
                los = los_amp * np.exp(
                    1j * two_pi_over_c * freqs[:, None] * d_los[None, :]
                )
                link = los[None, :, :] + math.sqrt(scatter_power_los) * scattered
            else:
                link = scattered
            data[:, :, k, cols] = link

    return ChannelTensor(data, scene.antenna_ap_map())
