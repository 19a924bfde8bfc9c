"""Brute-force validation suite behind the `oracle` CLI subcommand.

Every check recomputes a quantity with a slow, independent method (bisection
water level, cofactor inverse, eigendecomposition of the Gram matrix, grid
search over the two-user simplex, counting CDF) and compares it against the
fast implementation. Nothing here shares a code path with the library
routines it validates.
"""

from __future__ import annotations

import math

import numpy as np

from .metrics import SnrSpec, dpc_capacity, svs, waterfill, zf_sum_rate
from .stats import compute_cdf
from .tensor import singular_values, zf_effective_gains


def _complex_draw(gen, shape):
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / math.sqrt(2.0)


def _bisect_water_level(noise, budget):
    lo, hi = float(np.min(noise)), float(np.max(noise)) + budget
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.maximum(mid - noise, 0.0).sum() > budget:
            hi = mid
        else:
            lo = mid
    mu = 0.5 * (lo + hi)
    return np.maximum(mu - noise, 0.0)


def _grid_capacities(matrix, rho_linear, step=1e-4):
    k, m = matrix.shape
    c = rho_linear * k / m
    gram = matrix @ matrix.conj().T
    p0 = np.minimum(np.arange(0.0, 1.0 + step / 2, step), 1.0)
    det = (1.0 + c * p0 * np.real(gram[0, 0])) * (
        1.0 + c * (1.0 - p0) * np.real(gram[1, 1])
    ) - (c * c) * p0 * (1.0 - p0) * np.abs(gram[0, 1]) ** 2
    dpc = float(np.max(np.log2(det)))
    gdet = np.real(gram[0, 0]) * np.real(gram[1, 1]) - np.abs(gram[0, 1]) ** 2
    noise = (
        np.array([np.real(gram[1, 1]) / gdet, np.real(gram[0, 0]) / gdet])
        * m
        / (rho_linear * k)
    )
    zf = float(
        np.max(np.log2(1.0 + p0 / noise[0]) + np.log2(1.0 + (1.0 - p0) / noise[1]))
    )
    return dpc, zf


def run_selfcheck(report=print, seed: int = 2025) -> bool:
    """Run every brute-force check; prints one PASS/FAIL line per check."""
    all_ok = True

    def judge(name, ok, detail):
        nonlocal all_ok
        all_ok = all_ok and ok
        report(f"{'PASS' if ok else 'FAIL'} {name} ({detail})")

    gen = np.random.default_rng(seed)

    worst = 0.0
    for _ in range(200):
        k = int(gen.integers(2, 13))
        noise = gen.uniform(0.05, 5.0, k)
        budget = float(gen.uniform(0.2, 4.0))
        fast = waterfill(noise, budget)
        slow = _bisect_water_level(noise, budget)
        worst = max(worst, float(np.max(np.abs(fast.p - slow))))
    judge("waterfill-vs-bisection", worst < 1e-9, f"max |dp| = {worst:.2e} over 200 draws")

    worst = 0.0
    for i in range(20):
        matrix = _complex_draw(gen, (2, 4))
        for rho_db in (0.0, 10.0, 20.0):
            snr = SnrSpec(rho_db)
            grid_dpc, grid_zf = _grid_capacities(matrix, snr.rho_linear)
            err_d = abs(dpc_capacity(matrix, snr).sum_rate_bits_per_s_per_hz - grid_dpc)
            err_z = abs(zf_sum_rate(matrix, snr).sum_rate_bits_per_s_per_hz - grid_zf)
            worst = max(worst, err_d, err_z)
    judge(
        "capacity-vs-grid-search",
        worst < 1e-3,
        f"max |dC| = {worst:.2e} bit/s/Hz over 20 draws x 3 SNRs",
    )

    worst = 0.0
    for _ in range(50):
        k = int(gen.integers(1, 9))
        m = int(gen.integers(k, 17))
        matrix = _complex_draw(gen, (k, m))
        sv = singular_values(matrix)
        ref = np.sqrt(
            np.maximum(np.linalg.eigvalsh(matrix @ matrix.conj().T)[::-1], 0.0)
        )
        worst = max(worst, float(np.max(np.abs(sv - ref) / ref[0])))
        kappa = svs(matrix)
        ref_kappa = 10.0 * math.log10(ref[0] / ref[-1])
        worst = max(worst, abs(kappa - ref_kappa) / max(ref_kappa, 1.0))
    judge("svd-vs-gram-eigendecomposition", worst < 1e-9, f"max rel err = {worst:.2e}")

    worst = 0.0
    for _ in range(50):
        matrix = _complex_draw(gen, (3, 8))
        gains = zf_effective_gains(matrix)
        gram = matrix @ matrix.conj().T
        cof = np.empty((3, 3), dtype=complex)
        for i in range(3):
            for j in range(3):
                minor = np.delete(np.delete(gram, i, axis=0), j, axis=1)
                cof[i, j] = (-1) ** (i + j) * (
                    minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0]
                )
        det = gram[0, 0] * cof[0, 0] + gram[0, 1] * cof[0, 1] + gram[0, 2] * cof[0, 2]
        ref = np.real(np.diag(cof.T / det))
        worst = max(worst, float(np.max(np.abs(gains - ref) / ref)))
    judge("zf-gains-vs-cofactor-inverse", worst < 1e-9, f"max rel err = {worst:.2e}")

    ok = True
    for _ in range(10):
        samples = gen.normal(size=200)
        table = compute_cdf(samples, 64)
        counted = np.array(
            [np.count_nonzero(samples <= x) / samples.size for x in table.grid]
        )
        ok = ok and bool(np.max(np.abs(table.probs - counted)) == 0.0)
    judge("cdf-vs-counting", ok, "10 draws, exact match")

    return all_ok
