"""Husimi Q and Wigner functions on phase-space grids.

The Wigner function is evaluated from the Fock expansion
``W(alpha) = sum_{mn} rho_{mn} <n|Pi(alpha)|m>`` with the displaced parity
kernel ``Pi = (2/pi) D(alpha) P D(alpha)^dag``. Kernel elements along each
off-diagonal are generated by the associated-Laguerre three-term recurrence
in normalized form, so every intermediate stays bounded by 2/pi.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .fock import DensityMatrix

KINDS = ("husimi", "wigner")


@dataclass(frozen=True)
class PhaseSpaceGrid:
    re_min: float = -4.0
    re_max: float = 4.0
    im_min: float = -4.0
    im_max: float = 4.0
    nx: int = 121
    ny: int = 121

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"empty grid box {self}")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs at least 2x2 samples, got {self.nx}x{self.ny}")

    @classmethod
    def square(cls, half_width, n):
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.nx)

    @property
    def im(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.ny)

    @property
    def spacing(self):
        return ((self.re_max - self.re_min) / (self.nx - 1),
                (self.im_max - self.im_min) / (self.ny - 1))

    def as_tuple(self):
        return (self.re_min, self.re_max, self.im_min, self.im_max, self.nx, self.ny)


@dataclass(frozen=True)
class PhaseSpaceField:
    """``values[i, j]`` is the distribution at ``re[i] + 1j*im[j]``."""

    grid: PhaseSpaceGrid
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def argmax(self):
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return complex(self.grid.re[i], self.grid.im[j]), float(self.values[i, j])

    def argmin(self):
        i, j = np.unravel_index(np.argmin(self.values), self.values.shape)
        return complex(self.grid.re[i], self.grid.im[j]), float(self.values[i, j])


def _coherent_columns(alphas, dim):
    """Columns <n|alpha> for each alpha, via the stable recurrence."""
    alphas = np.asarray(alphas, dtype=complex)
    out = np.empty((dim, alphas.size), dtype=complex)
    out[0] = np.exp(-0.5 * np.abs(alphas) ** 2)
    for n in range(1, dim):
        out[n] = out[n - 1] * alphas / math.sqrt(n)
    return out


def husimi_values(rho: DensityMatrix, alphas) -> np.ndarray:
    """(1/pi) <alpha|rho|alpha> at each point of ``alphas``."""
    cols = _coherent_columns(alphas, rho.dim)
    values = np.einsum("np,np->p", cols.conj(), rho.entries @ cols)
    return values.real / math.pi


def husimi_q(rho: DensityMatrix, alpha: complex) -> float:
    return float(husimi_values(rho, [alpha])[0])


def _bandwidth(entries):
    nonzero = np.nonzero(entries)
    if nonzero[0].size == 0:
        return 0
    return int(np.max(np.abs(nonzero[0] - nonzero[1])))


def wigner_values(rho: DensityMatrix, alphas, return_imag: bool = False):
    """Wigner function at each point of ``alphas``.

    With ``return_imag`` also returns the imaginary residue of the full
    complex Fock sum (zero up to rounding for Hermitian rho).
    """
    entries = rho.entries
    dim = rho.dim
    alphas = np.asarray(alphas, dtype=complex).ravel()
    x = 4.0 * np.abs(alphas) ** 2
    kmax = _bandwidth(entries)
    k = np.arange(kmax + 1)[:, None]
    # first row <0|Pi|k> = (2/pi) e^{-2|a|^2} (2 conj(a))^k / sqrt(k!), built in log space
    two_conj = 2.0 * alphas.conj()
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mag = (math.log(2 / math.pi) - x / 2 + k * np.log(np.abs(two_conj))[None, :]
                   - 0.5 * gammaln(k + 1))
    log_mag[0] = math.log(2 / math.pi) - x / 2
    row = np.exp(log_mag) * np.exp(1j * k * np.angle(two_conj)[None, :])
    prev = np.zeros_like(row)
    total = np.zeros(alphas.size, dtype=complex)
    for m in range(dim):
        width = min(kmax, dim - 1 - m) + 1
        # rho_{m+k, m} pairs with <m|Pi|m+k>
        lower = entries[m + np.arange(width), m][:, None]
        upper = entries[m, m + np.arange(width)][:, None]
        total += np.sum(lower * row[:width], axis=0)
        if width > 1:
            total += np.sum(upper[1:] * row[1:width].conj(), axis=0)
        if m + 1 < dim:
            kk = k[:, 0][:, None]
            nxt = -((2 * m + 1 + kk - x[None, :]) * row + math.sqrt(m) * np.sqrt(m + kk) * prev)
            nxt /= np.sqrt((m + 1) * (m + 1 + kk))
            prev, row = row, nxt
    if return_imag:
        return total.real, total.imag
    return total.real


def wigner(rho: DensityMatrix, alpha: complex) -> float:
    return float(wigner_values(rho, [alpha])[0])


_KERNELS = {"husimi": husimi_values, "wigner": wigner_values}


def eval_grid(rho: DensityMatrix, grid: PhaseSpaceGrid, kind: str, workers: int = 1,
              meta: Optional[dict] = None) -> PhaseSpaceField:
    """Sample ``kind`` over ``grid``.

    Work is split by rows of fixed shape, so values are bitwise identical for
    any ``workers``.
    """
    if kind not in _KERNELS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    kernel = _KERNELS[kind]
    re, im = grid.re, grid.im

    def row(i):
        return kernel(rho, re[i] + 1j * im)

    if workers <= 1:
        rows = [row(i) for i in range(grid.nx)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(grid.nx)))
    return PhaseSpaceField(grid, np.vstack(rows), kind, dict(meta or {}))


def quadrature_integral(field: PhaseSpaceField) -> float:
    """Riemann sum of the samples times the cell area."""
    d_re, d_im = field.grid.spacing
    return float(np.sum(field.values) * d_re * d_im)


# --- printed closed forms (literal, uncorrected) ---------------------------

def _series(z, coeffs):
    """sum_k coeffs[k] z^k / k! with 0^0 = 1, using a running term."""
    z = np.asarray(z, dtype=complex)
    term = np.ones_like(z)
    total = np.zeros_like(z)
    with np.errstate(over="ignore", invalid="ignore"):
        for j, c in enumerate(coeffs):
            if j > 0:
                term = term * z / j
            total = total + c * term
    return total


def _power_series(y, coeffs):
    """sum_k coeffs[k] y^k, no factorials."""
    y = np.asarray(y, dtype=float)
    term = np.ones_like(y)
    total = np.zeros_like(y)
    with np.errstate(over="ignore", invalid="ignore"):
        for j, c in enumerate(coeffs):
            if j > 0:
                term = term * y
            total = total + c * term
    return total


def closed_form_reference(kind: str, params: dict, alpha, cutoff: int = 80):
    """Transcription of the printed Q/W expressions for coherent and thermal inputs.

    ``kind`` is one of ``q_coh``, ``q_thm``, ``w_coh``, ``w_thm``. ``params``
    carries ``g`` (default 1), ``t1``, ``t2`` and ``alpha0`` or ``nbar``. Series
    run over n < cutoff.
    """
    g = params.get("g", 1.0)
    t1, t2 = params["t1"], params["t2"]
    alpha = np.asarray(alpha, dtype=complex)
    n = np.arange(cutoff)
    s1 = np.sin(np.sqrt(2 * n) * g * t1)
    s2 = np.sin(np.sqrt(2 * n) * g * t2)
    c2 = np.cos(np.sqrt(2 * n) * g * t2)
    # index shift: coefficient of z^(n-1) in the first sums carries the n-th trig factors
    first = np.append((s1 * c2)[1:], 0.0)
    second = s1 * s2
    if kind in ("q_coh", "w_coh"):
        a0 = complex(params["alpha0"])
        scale = 1.0 if kind == "q_coh" else 2.0
        z = scale * a0 * alpha.conj()
        first_sum = np.abs(_series(z, first)) ** 2
        second_sum = np.abs(_series(z, second)) ** 2
        if kind == "q_coh":
            pref = np.exp(-(abs(a0) ** 2 + np.abs(alpha) ** 2)) / math.pi
        else:
            pref = 2 / math.pi * np.exp(-(abs(a0) ** 2 + 2 * np.abs(alpha) ** 2))
        return pref * (first_sum + second_sum)
    if kind in ("q_thm", "w_thm"):
        nbar = float(params["nbar"])
        first2 = np.append((s1 ** 2 * c2 ** 2)[1:], 0.0)
        second2 = s1 ** 2 * s2 ** 2
        if kind == "q_thm":
            z = nbar * np.abs(alpha) ** 2 / (nbar + 1)
            pref = np.exp(-np.abs(alpha) ** 2) / (math.pi * (nbar + 1))
            return pref * (_series(z, first2) + _series(z, second2)).real
        y = 4 * nbar * np.abs(alpha) ** 2 / (nbar + 1)
        pref = 2 / math.pi / (nbar + 1) * np.exp(-2 * np.abs(alpha) ** 2)
        with np.errstate(over="ignore", invalid="ignore"):
            return pref * (_power_series(y, first2) + _power_series(y, second2))
    raise ValueError(f"unknown closed form {kind!r}")
