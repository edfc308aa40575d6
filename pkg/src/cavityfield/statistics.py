"""Photon statistics and normal-ordered quadrature squeezing of the final field."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, UndefinedStatisticError
from .fock import DensityMatrix, expectation, make_annihilation, make_creation
from .states import InputFieldSpec, field_vector, photon_distribution

NORMALIZATIONS = ("paper_faithful", "renormalized")


@dataclass(frozen=True)
class MomentSet:
    """Unnormalized field moments, with ``trace`` kept for bookkeeping."""

    mean_n: float
    second_factorial: float
    adag: complex
    adag2: complex
    trace: float

    def normalized(self, normalization: str) -> "MomentSet":
        if normalization not in NORMALIZATIONS:
            raise DomainError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
        if normalization == "paper_faithful":
            return self
        tr = self.trace
        return MomentSet(self.mean_n / tr, self.second_factorial / tr, self.adag / tr,
                         self.adag2 / tr, 1.0)


@dataclass(frozen=True)
class SqueezingResult:
    s_opt: float
    theta_min: float

    @property
    def squeezed(self) -> bool:
        return self.s_opt < 0


def moments(rho: DensityMatrix) -> MomentSet:
    """The five moments as operator traces on ``rho``."""
    if rho.dim < 3:
        raise DimensionError(f"need dim >= 3 for a^dag^2, got {rho.dim}")
    a = make_annihilation(rho.dim)
    ad = make_creation(rho.dim)
    mean_n = expectation(rho, ad @ a)
    fact2 = expectation(rho, ad @ ad @ a @ a)
    return MomentSet(mean_n.real, fact2.real, expectation(rho, ad), expectation(rho, ad @ ad),
                     rho.trace)


def mandel_q(m: MomentSet, normalization: str = "paper_faithful") -> float:
    """(<a+^2 a^2> - <a+a>^2) / <a+a>."""
    m = m.normalized(normalization)
    if m.mean_n <= 1e-14:
        raise UndefinedStatisticError(f"Mandel Q undefined for <a+a> = {m.mean_n:.3e}")
    return (m.second_factorial - m.mean_n ** 2) / m.mean_n


def quadrature_variance(m: MomentSet, theta: float, normalization: str = "paper_faithful") -> float:
    """Normal-ordered variance of X_theta = a e^{-i theta} + a+ e^{i theta}."""
    m = m.normalized(normalization)
    phase_term = np.exp(2j * np.asarray(theta)) * (m.adag2 - m.adag ** 2)
    return 2 * phase_term.real + 2 * (m.mean_n - abs(m.adag) ** 2)


def squeezing_opt(m: MomentSet, normalization: str = "paper_faithful") -> SqueezingResult:
    m = m.normalized(normalization)
    sensitive = m.adag2 - m.adag ** 2
    s_opt = -2 * abs(sensitive) + 2 * m.mean_n - 2 * abs(m.adag) ** 2
    theta = 0.0
    if abs(sensitive) > 0:
        theta = ((math.pi - np.angle(sensitive)) / 2) % math.pi
    return SqueezingResult(float(s_opt), float(theta))


# --- printed moment sums (literal, uncorrected) ----------------------------

def _amplitudes(spec: InputFieldSpec, dim: int) -> np.ndarray:
    # thermal weights enter the printed coherence sums as amplitudes sqrt(p_n)
    if spec.is_mixed:
        return np.sqrt(photon_distribution(spec, dim)).astype(complex)
    return field_vector(spec, dim).amps


def closed_moment_sums(spec: InputFieldSpec, g: float, t1: float, t2: float,
                       dim: int = 80) -> MomentSet:
    """The printed sums for <a+a>, <a+^2a^2>, <a+>, <a+^2>.

    Sums run over n >= 1 so that every sqrt argument is nonnegative;
    amplitudes outside 0..dim-1 count as zero. ``trace`` is the printed
    post-selection norm sum |F_n|^2 sin^2(sqrt(2n) g t1).
    """
    amps = _amplitudes(spec, dim + 4)

    def F(k):
        k = np.asarray(k)
        out = np.zeros(k.shape, dtype=complex)
        ok = (k >= 0) & (k < dim)
        out[ok] = amps[k[ok]]
        return out

    n = np.arange(1, dim + 1)
    s = lambda arg, t: np.sin(np.sqrt(arg) * g * t)
    c = lambda arg, t: np.cos(np.sqrt(arg) * g * t)
    sin1, cos2, sin2 = s(2 * n, t1), c(2 * n, t2), s(2 * n, t2)
    mean_n = (2 * np.sum((n - 1) * np.abs(F(n - 1)) ** 2 * sin1 ** 2 * cos2 ** 2)
              + np.sum(n * np.abs(F(n)) ** 2 * sin1 ** 2 * sin2 ** 2))
    fact2 = (2 * np.sum((n - 2) * (n - 1) * np.abs(F(n - 1)) ** 2 * sin1 ** 2 * cos2 ** 2)
             + np.sum((n - 1) * n * np.abs(F(n)) ** 2 * sin1 ** 2 * sin2 ** 2))
    adag = (2 * np.sum(np.sqrt(n) * F(n - 1) * F(n + 1).conj()
                       * s(2 * n - 2, t1) * s(2 * n + 2, t2) * c(2 * n - 2, t1) * c(2 * n + 2, t2))
            + np.sum(np.sqrt(n + 1) * F(n) * F(n + 2).conj()
                     * s(2 * n - 2, t1) * s(2 * n - 2, t2) * s(2 * n + 4, t1) * s(2 * n + 4, t2)))
    adag2 = (2 * np.sum(np.sqrt(n) * np.sqrt(n + 1) * F(n - 1) * F(n + 2).conj()
                        * s(2 * n - 2, t1) * s(2 * n + 4, t2) * c(2 * n - 2, t1) * c(2 * n + 4, t2))
             + np.sum(np.sqrt(n + 1) * np.sqrt(n + 2) * F(n) * F(n + 3).conj()
                      * s(2 * n - 2, t1) * s(2 * n - 2, t2) * s(2 * n + 6, t1) * s(2 * n + 6, t2)))
    n0 = np.arange(dim)
    trace = np.sum(np.abs(F(n0)) ** 2 * np.sin(np.sqrt(2 * n0) * g * t1) ** 2)
    return MomentSet(float(mean_n.real), float(fact2.real), complex(adag), complex(adag2),
                     float(trace.real))
