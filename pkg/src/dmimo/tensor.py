"""Channel tensor container, seeded randomness, and the dense linear algebra
every separability metric builds on.

A ChannelTensor holds complex coefficients indexed (snapshot t, subcarrier l,
user k, antenna m) with the antenna axis fastest-varying, plus a per-antenna
access-point map. Metric kernels consume one K x M snapshot matrix per (t, l).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError, RankDeficiencyError

# condition number at and above which a matrix is treated as singular
COND_LIMIT = 1e12


@dataclass(frozen=True)
class ChannelTensor:
    """Immutable complex channel tensor with shape (T, L, K, M).

    Parameters
    ----------
    data : array_like
        Complex coefficients, shape (T, L, K, M): snapshot, subcarrier,
        user, antenna. Copied to complex128 and frozen.
    antenna_ap_map : array_like
        Length-M integer vector; entry m is the access-point index owning
        antenna column m. Each AP's antennas must form one contiguous run.
    """

    data: np.ndarray
    antenna_ap_map: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.complex128, order="C", copy=True)
        if data.ndim != 4:
            raise DimensionError(
                f"channel tensor must be 4-D (T, L, K, M), got {data.ndim}-D"
            )
        if min(data.shape) < 1:
            raise DimensionError(f"all dims must be >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("channel tensor entries must all be finite")
        ap_map = np.array(self.antenna_ap_map, dtype=np.int64, copy=True)
        if ap_map.ndim != 1 or ap_map.shape[0] != data.shape[3]:
            raise DimensionError(
                f"antenna_ap_map must be a length-{data.shape[3]} vector, "
                f"got shape {ap_map.shape}"
            )
        if np.any(ap_map < 0):
            raise InvalidInputError("antenna_ap_map entries must be non-negative")
        # every AP id must occupy a single unbroken run of antenna columns
        boundaries = np.flatnonzero(np.diff(ap_map) != 0) + 1
        run_ids = ap_map[np.concatenate(([0], boundaries))]
        if len(np.unique(run_ids)) != len(run_ids):
            raise InvalidInputError(
                "antenna_ap_map must group each AP's antennas contiguously"
            )
        data.setflags(write=False)
        ap_map.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "antenna_ap_map", ap_map)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def num_snapshots(self) -> int:
        return self.data.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.data.shape[1]

    @property
    def num_users(self) -> int:
        return self.data.shape[2]

    @property
    def num_antennas(self) -> int:
        return self.data.shape[3]

    @property
    def ap_ids(self) -> tuple[int, ...]:
        """Distinct AP ids in antenna order."""
        boundaries = np.flatnonzero(np.diff(self.antenna_ap_map) != 0) + 1
        starts = np.concatenate(([0], boundaries))
        return tuple(int(i) for i in self.antenna_ap_map[starts])

    @property
    def num_aps(self) -> int:
        return len(self.ap_ids)

    def slice_matrix(self, t: int, l: int) -> np.ndarray:
        """The K x M snapshot matrix at (snapshot t, subcarrier l)."""
        return self.data[t, l]

    def iter_slices(self):
        """Yield (t, l, K x M matrix) for every slice, snapshot-major."""
        for t in range(self.num_snapshots):
            for l in range(self.num_subcarriers):
                yield t, l, self.data[t, l]


@dataclass(frozen=True)
class RngHandle:
    """Root of a deterministic random stream.

    The same (seed, stream) pair reproduces the same draw sequence on every
    run and under any thread schedule; distinct stream ids give statistically
    independent sequences, so concurrent workers each own one handle.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                raise InvalidInputError(f"{name} must be an integer")
            if not 0 <= int(value) < 2**64:
                raise InvalidInputError(f"{name} must fit in an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(seq))


def _as_snapshot_matrix(matrix, require_tall: bool = True) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"snapshot matrix must be 2-D (K, M), got {m.ndim}-D")
    if require_tall and m.shape[0] > m.shape[1]:
        raise DimensionError(
            f"need K <= M, got K={m.shape[0]} users over M={m.shape[1]} antennas"
        )
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("snapshot matrix entries must all be finite")
    return m


def singular_values(matrix) -> np.ndarray:
    """Singular values of a K x M snapshot matrix, descending.

    Satisfies sum(sigma_k^2) = ||m||_F^2 and sigma_k >= 0.
    """
    m = _as_snapshot_matrix(matrix)
    return np.linalg.svd(m, compute_uv=False)


def zf_effective_gains(matrix, snapshot=None, subcarrier=None) -> np.ndarray:
    """Diagonal of (H @ H^H)^-1: per-user squared gains under zero-forcing.

    Raises RankDeficiencyError when the Gram matrix has condition number
    >= COND_LIMIT; `snapshot`/`subcarrier` tag the error when the matrix is
    one slice of a tensor sweep.
    """
    m = _as_snapshot_matrix(matrix)
    sv = np.linalg.svd(m, compute_uv=False)
    # gram condition is the squared singular-value ratio
    if sv[-1] <= 0.0 or sv[0] * sv[0] >= COND_LIMIT * (sv[-1] * sv[-1]):
        raise RankDeficiencyError(
            "channel Gram matrix is singular or near-singular "
            f"(squared condition >= {COND_LIMIT:.0e})",
            snapshot=snapshot,
            subcarrier=subcarrier,
        )
    gram = m @ m.conj().T
    gains = np.real(np.diag(np.linalg.inv(gram))).copy()
    if not np.all(gains > 0.0):
        raise RankDeficiencyError(
            "channel Gram inverse lost positive definiteness",
            snapshot=snapshot,
            subcarrier=subcarrier,
        )
    return gains
