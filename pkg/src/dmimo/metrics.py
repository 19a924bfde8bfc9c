"""Separability metrics: singular value spread, water-filling, ZF sum rate,
DPC sum capacity, and the allocated-user fairness count.

Capacity conventions (K users, M antennas, mean per-user SNR rho):
the transmit scaling constant is c = rho*K/M, the DPC objective per (t, l)
slice is log2 det(I + c * H^H P H) maximized over diagonal P with tr(P) = 1,
and the ZF rate is sum_k log2(1 + c * p_k / g_k^2) with g_k^2 the k-th
diagonal entry of (H H^H)^{-1}. Tensor-level results average the per-slice
values over all (t, l); the subcarrier index of the rate average is read as
l = 1..L throughout.

Both optimizers accept allocation_mode="per_tl" (independent allocation per
slice, the default) or "joint" (one allocation shared by all slices, i.e. the
max over p placed outside the (t, l) average). The two coincide at L = T = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError
from .tensor import (
    COND_LIMIT,
    ChannelTensor,
    _as_snapshot_matrix,
    singular_values,
    zf_effective_gains,
)

_LN2 = math.log(2.0)

ALLOCATION_MODES = ("per_tl", "joint")

# convergence contract shared by the iterative optimizers
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERATIONS = 500

# fraction of total power below which a user counts as unallocated
ALLOCATED_EPSILON_FRACTION = 1e-12


@dataclass(frozen=True)
class SnrSpec:
    """Mean per-user SNR. Stored in dB; rho_linear = 10^(rho_db/10)."""

    rho_db: float

    def __post_init__(self):
        if not math.isfinite(float(self.rho_db)):
            raise InvalidInputError("rho_db must be finite")
        object.__setattr__(self, "rho_db", float(self.rho_db))

    @property
    def rho_linear(self) -> float:
        return 10.0 ** (self.rho_db / 10.0)

    @classmethod
    def from_linear(cls, rho_linear: float) -> "SnrSpec":
        if not (rho_linear > 0 and math.isfinite(rho_linear)):
            raise InvalidInputError("rho_linear must be positive and finite")
        return cls(10.0 * math.log10(rho_linear))


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user power vector plus the water level that produced it."""

    p: np.ndarray
    water_level: float

    def __post_init__(self):
        p = np.array(self.p, dtype=float, copy=True)
        if p.ndim != 1 or p.shape[0] < 1:
            raise InvalidInputError("p must be a non-empty vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidInputError("powers must be finite and non-negative")
        level = float(self.water_level)
        if not (level > 0 and math.isfinite(level)):
            raise InvalidInputError("water_level must be positive and finite")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "water_level", level)

    @property
    def num_users(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class CapacityResult:
    """Outcome of a capacity optimization.

    `allocation` is a single PowerAllocation when one allocation covers the
    input (single slice, or joint mode), otherwise a tuple with one entry per
    (t, l) slice in snapshot-major order. `iterations` is the largest
    iteration count any slice used.
    """

    sum_rate_bits_per_s_per_hz: float
    allocation: object
    iterations: int
    converged: bool

    def allocations(self) -> tuple:
        if isinstance(self.allocation, PowerAllocation):
            return (self.allocation,)
        return tuple(self.allocation)


def svs(matrix) -> float:
    """Singular value spread of a K x M matrix in dB.

    10*log10(sigma_max/sigma_min); 0 dB means equal singular values
    (mutually orthogonal equal-gain users). Returns math.inf as an explicit
    saturation marker when the matrix is rank deficient (condition number
    >= 1e12), never a silent large number.
    """
    sv = singular_values(matrix)
    smax = float(sv[0])
    smin = float(sv[-1])
    if smin <= 0.0 or smax >= COND_LIMIT * smin:
        return math.inf
    return 10.0 * math.log10(smax / smin)


def waterfill(noise_levels, budget) -> PowerAllocation:
    """Exact water-filling: maximize sum log2(1 + p_k/n_k), sum p = budget.

    Sort-based closed form. p_k = max(0, mu - n_k); a user whose noise equals
    the water level exactly gets zero power. KKT holds to float precision:
    p_k + n_k = mu for active users, n_k >= mu for the rest.
    """
    noise = np.asarray(noise_levels, dtype=float)
    if noise.ndim != 1 or noise.shape[0] < 1:
        raise InvalidInputError("noise_levels must be a non-empty vector")
    if not np.all(np.isfinite(noise)) or np.any(noise <= 0):
        raise InvalidInputError("noise levels must be finite and positive")
    budget = float(budget)
    if not (budget > 0 and math.isfinite(budget)):
        raise InvalidInputError("budget must be positive and finite")

    order = np.argsort(noise, kind="stable")
    sorted_noise = noise[order]
    counts = np.arange(1, noise.shape[0] + 1, dtype=float)
    levels = (budget + np.cumsum(sorted_noise)) / counts
    # feasible active-set sizes keep every active noise strictly under water
    feasible = np.flatnonzero(levels > sorted_noise)
    j = int(feasible[-1]) + 1
    mu = float(levels[j - 1])
    p_sorted = np.zeros_like(sorted_noise)
    p_sorted[:j] = mu - sorted_noise[:j]
    p = np.empty_like(p_sorted)
    p[order] = p_sorted
    return PowerAllocation(p, water_level=mu)


def count_allocated_users(alloc: PowerAllocation) -> int:
    """Number of users holding more than 1e-12 of the total power."""
    if not isinstance(alloc, PowerAllocation):
        raise InvalidInputError("count_allocated_users expects a PowerAllocation")
    eps = ALLOCATED_EPSILON_FRACTION * float(alloc.p.sum())
    return int(np.count_nonzero(alloc.p > eps))


def _slice_list(ch, require_tall: bool = True) -> list:
    """Normalize tensor-or-matrix input to [(t, l, K x M matrix), ...].

    ZF and the spread need K <= M (a tall Gram matrix); DPC is defined for
    any K, so it opts out of that check.
    """
    if isinstance(ch, ChannelTensor):
        _, _, k, mm = ch.dims
        if require_tall and k > mm:
            raise DimensionError(
                f"need K <= M per snapshot, got K={k} users and M={mm} antennas"
            )
        return [(t, l, m) for t, l, m in ch.iter_slices()]
    m = _as_snapshot_matrix(ch, require_tall=require_tall)
    return [(0, 0, m)]


def _require_snr(snr) -> SnrSpec:
    if not isinstance(snr, SnrSpec):
        raise InvalidInputError("snr must be an SnrSpec")
    return snr


def _check_mode(allocation_mode: str) -> str:
    if allocation_mode not in ALLOCATION_MODES:
        raise InvalidInputError(
            f"allocation_mode must be one of {ALLOCATION_MODES}, got {allocation_mode!r}"
        )
    return allocation_mode


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex {p >= 0, sum p = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    cond = u - css / idx > 0
    rho = int(np.flatnonzero(cond)[-1]) + 1
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _ascend_on_simplex(objective, gradient, k, tol, max_iterations):
    """Projected gradient ascent on the simplex with Armijo backtracking.

    Monotone by construction. Returns (p, value, iterations, converged,
    final gradient).
    """
    p = np.full(k, 1.0 / k)
    value = objective(p)
    grad = gradient(p)
    step = 1.0
    iterations = 0
    converged = False
    for it in range(1, max_iterations + 1):
        iterations = it
        accepted = False
        candidate = p
        cand_value = value
        for _ in range(60):
            candidate = _project_simplex(p + step * grad)
            ascent = float(grad @ (candidate - p))
            if ascent <= 0.0:
                break
            cand_value = objective(candidate)
            if cand_value >= value + 1e-4 * ascent:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        rel = (cand_value - value) / max(abs(cand_value), 1e-12)
        p, value = candidate, cand_value
        grad = gradient(p)
        step = min(step * 2.0, 1e6)
        if rel < tol:
            converged = True
            break
    return p, value, iterations, converged, grad


def _joint_water_level(grad: np.ndarray) -> float:
    """Map the simplex KKT multiplier to a water level.

    With a single slice the active-user gradient is 1/(ln2 * mu), so
    mu = 1/(ln2 * max_k grad_k); kept as an informational analog for joint
    allocations over many slices.
    """
    top = float(np.max(grad))
    if top <= 0.0:
        return 1.0
    return 1.0 / (_LN2 * top)


def zf_sum_rate(ch, snr, allocation_mode: str = "per_tl") -> CapacityResult:
    """Zero-forcing sum rate with water-filled powers, averaged over (t, l).

    Per slice: effective noise n_k = g_k^2 * M/(rho*K) with g_k^2 from
    (H H^H)^{-1}; powers water-filled under unit budget; rate
    sum_k log2(1 + p_k/n_k). Per-slice allocation by default; joint mode
    shares one allocation across slices. Raises RankDeficiencyError naming
    the (t, l) slice whose Gram matrix is not invertible.
    """
    snr = _require_snr(snr)
    mode = _check_mode(allocation_mode)
    slices = _slice_list(ch)
    rho = snr.rho_linear

    noises = []
    for t, l, m in slices:
        gains = zf_effective_gains(m, snapshot=t, subcarrier=l)
        k, mm = m.shape
        noises.append(gains * mm / (rho * k))

    if mode == "per_tl":
        rates = []
        allocs = []
        for noise in noises:
            alloc = waterfill(noise, 1.0)
            rates.append(float(np.log2(1.0 + alloc.p / noise).sum()))
            allocs.append(alloc)
        rate = float(np.mean(rates))
        allocation = allocs[0] if len(allocs) == 1 else tuple(allocs)
        return CapacityResult(rate, allocation, iterations=1, converged=True)

    noise_grid = np.asarray(noises)

    def objective(p):
        return float(np.mean(np.sum(np.log2(1.0 + p[None, :] / noise_grid), axis=1)))

    def gradient(p):
        return np.mean(1.0 / (noise_grid + p[None, :]), axis=0) / _LN2

    k = noise_grid.shape[1]
    p, value, iterations, converged, grad = _ascend_on_simplex(
        objective, gradient, k, DEFAULT_TOL, DEFAULT_MAX_ITERATIONS
    )
    alloc = PowerAllocation(p, water_level=_joint_water_level(grad))
    return CapacityResult(value, alloc, iterations=iterations, converged=converged)


def _dpc_objective(p, gram, c):
    """log2 det(I + c P G) for diagonal P; equals the M x M form exactly."""
    k = gram.shape[0]
    a = np.eye(k, dtype=complex) + c * p[:, None] * gram
    sign, logabs = np.linalg.slogdet(a)
    return float(logabs / _LN2)


def _dpc_interference_gains(p, gram, c):
    """Diagonal of B = G (I + c P G)^{-1}, real.

    B_kk/(1 - c p_k B_kk) is user k's effective channel gain with its own
    power removed from the interference background; the gradient of the
    objective is (c/ln2) B_kk.
    """
    k = gram.shape[0]
    a = np.eye(k, dtype=complex) + c * p[:, None] * gram
    b = np.linalg.solve(a.T, gram.T).T
    return np.real(np.diag(b)).copy()


def _dpc_slice(m, rho, tol, max_iterations, debug):
    """Sum-power iterative water-filling on one K x M slice.

    Damped best-response: water-fill against every user's interference-
    reduced effective noise, then keep the best objective among damped steps
    towards that best response. Monotone non-decreasing by construction; the
    objective is checked per iteration when debug is set.
    """
    k, mm = m.shape
    c = rho * k / mm
    gram = m @ m.conj().T
    steps = sorted({1.0, 0.5, 0.25, 0.125, 1.0 / k}, reverse=True)

    p = np.full(k, 1.0 / k)
    value = _dpc_objective(p, gram, c)
    mu = 1.0
    iterations = 0
    converged = False
    for it in range(1, max_iterations + 1):
        iterations = it
        bkk = _dpc_interference_gains(p, gram, c)
        denom = np.maximum(1.0 - c * p * bkk, 1e-300)
        inv_noise = c * np.where(bkk > 0.0, bkk / denom, 0.0)
        active = np.flatnonzero(inv_noise > 1e-300)
        if active.size == 0:
            converged = True
            break
        q = np.zeros(k)
        response = waterfill(1.0 / inv_noise[active], 1.0)
        q[active] = response.p
        mu = response.water_level

        best_value, best_p = value, p
        for step in steps:
            candidate = (1.0 - step) * p + step * q
            cand_value = _dpc_objective(candidate, gram, c)
            if cand_value > best_value:
                best_value, best_p = cand_value, candidate
        if best_value <= value:
            converged = True
            break
        if debug and best_value < value:
            raise AssertionError("iterative water-filling objective decreased")
        rel = (best_value - value) / max(abs(best_value), 1e-12)
        p, value = best_p, best_value
        if rel < tol:
            converged = True
            break
    return value, PowerAllocation(p, water_level=mu), iterations, converged


def dpc_capacity(
    ch,
    snr,
    allocation_mode: str = "per_tl",
    tol: float = DEFAULT_TOL,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    debug: bool = False,
) -> CapacityResult:
    """DPC sum capacity via sum-power iterative water-filling.

    Maximizes log2 det(I + c H^H P H) per (t, l) slice (c = rho*K/M) over
    diagonal P with tr(P) = 1, then averages; joint mode optimizes one P for
    the average directly. Convergence: relative objective change < tol or
    max_iterations reached — if any slice hits the cap the result comes back
    with converged=False rather than raising. The K x K Gram identity
    det(I + c H^H P H) = det(I + c P H H^H) keeps iterations cheap for
    large M.
    """
    snr = _require_snr(snr)
    mode = _check_mode(allocation_mode)
    if not (tol > 0 and math.isfinite(tol)):
        raise InvalidInputError("tol must be positive and finite")
    if int(max_iterations) < 1:
        raise InvalidInputError("max_iterations must be >= 1")
    slices = _slice_list(ch, require_tall=False)
    rho = snr.rho_linear

    if mode == "per_tl":
        values = []
        allocs = []
        iterations = 0
        converged = True
        for _, _, m in slices:
            v, alloc, its, ok = _dpc_slice(m, rho, tol, int(max_iterations), debug)
            values.append(v)
            allocs.append(alloc)
            iterations = max(iterations, its)
            converged = converged and ok
        rate = float(np.mean(values))
        allocation = allocs[0] if len(allocs) == 1 else tuple(allocs)
        return CapacityResult(rate, allocation, iterations=iterations, converged=converged)

    grams = []
    cs = []
    for _, _, m in slices:
        k, mm = m.shape
        grams.append(m @ m.conj().T)
        cs.append(rho * k / mm)
    k = grams[0].shape[0]

    def objective(p):
        return float(np.mean([_dpc_objective(p, g, c) for g, c in zip(grams, cs)]))

    def gradient(p):
        parts = [
            c * _dpc_interference_gains(p, g, c) for g, c in zip(grams, cs)
        ]
        return np.mean(parts, axis=0) / _LN2

    p, value, iterations, converged, grad = _ascend_on_simplex(
        objective, gradient, k, tol, int(max_iterations)
    )
    alloc = PowerAllocation(p, water_level=_joint_water_level(grad))
    return CapacityResult(value, alloc, iterations=iterations, converged=converged)
