"""Initial field states and the Fock cutoff policy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import DimensionError, DomainError, UnsupportedSpecError
from .fock import DensityMatrix, FieldVector

DEFAULT_TAIL_TOL = 1e-12
DEFAULT_HEADROOM = 5
KINDS = ("coherent", "thermal", "fock", "custom")


@dataclass(frozen=True)
class InputFieldSpec:
    """Initial cavity field. Only the fields of the active ``kind`` may be set."""

    kind: str
    alpha0: Optional[complex] = None
    nbar: Optional[float] = None
    n: Optional[int] = None
    custom_amps: Optional[Sequence[complex]] = None
    custom_probs: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown input kind {self.kind!r}; expected one of {KINDS}")
        active = {
            "coherent": ("alpha0",),
            "thermal": ("nbar",),
            "fock": ("n",),
            "custom": ("custom_amps", "custom_probs"),
        }[self.kind]
        for name in ("alpha0", "nbar", "n", "custom_amps", "custom_probs"):
            if name not in active and getattr(self, name) is not None:
                raise DomainError(f"{name} must not be set for kind {self.kind!r}")
        if self.kind == "coherent":
            if self.alpha0 is None:
                raise DomainError("coherent input needs alpha0")
            object.__setattr__(self, "alpha0", complex(self.alpha0))
        elif self.kind == "thermal":
            if self.nbar is None or not self.nbar >= 0 or not math.isfinite(self.nbar):
                raise DomainError(f"nbar must be a finite nonnegative real, got {self.nbar!r}")
            object.__setattr__(self, "nbar", float(self.nbar))
        elif self.kind == "fock":
            if self.n is None or int(self.n) != self.n or self.n < 0:
                raise DomainError(f"fock input needs a nonnegative integer n, got {self.n!r}")
            object.__setattr__(self, "n", int(self.n))
        else:
            if (self.custom_amps is None) == (self.custom_probs is None):
                raise DomainError("custom input needs exactly one of custom_amps, custom_probs")
            if self.custom_probs is not None and not callable(self.custom_probs):
                probs = np.asarray(self.custom_probs, dtype=float)
                if probs.ndim != 1 or probs.size == 0 or np.any(probs < 0):
                    raise DomainError("custom_probs must be a nonempty list of nonnegative reals")
                if abs(probs.sum() - 1.0) > 1e-12:
                    raise DomainError(f"custom_probs sum to {probs.sum()!r}, not 1")
                object.__setattr__(self, "custom_probs", tuple(float(p) for p in probs))
            if self.custom_amps is not None and not callable(self.custom_amps):
                object.__setattr__(self, "custom_amps", tuple(complex(a) for a in self.custom_amps))

    @classmethod
    def coherent(cls, alpha0):
        return cls("coherent", alpha0=alpha0)

    @classmethod
    def thermal(cls, nbar):
        return cls("thermal", nbar=nbar)

    @classmethod
    def fock(cls, n):
        return cls("fock", n=n)

    @property
    def is_mixed(self) -> bool:
        return self.kind == "thermal" or (self.kind == "custom" and self.custom_probs is not None)

    def describe(self) -> dict:
        """JSON-friendly description (used in sidecars)."""
        out = {"kind": self.kind}
        if self.kind == "coherent":
            out["alpha0"] = [self.alpha0.real, self.alpha0.imag]
        elif self.kind == "thermal":
            out["nbar"] = self.nbar
        elif self.kind == "fock":
            out["n"] = self.n
        elif self.custom_amps is not None:
            out["custom_amps"] = [[a.real, a.imag] for a in self.custom_amps]
        else:
            out["custom_probs"] = list(self.custom_probs)
        return out

    @classmethod
    def from_description(cls, desc: dict) -> "InputFieldSpec":
        kind = desc["kind"]
        if kind == "coherent":
            re, im = desc["alpha0"]
            return cls.coherent(complex(re, im))
        if kind == "thermal":
            return cls.thermal(desc["nbar"])
        if kind == "fock":
            return cls.fock(desc["n"])
        if "custom_amps" in desc:
            return cls("custom", custom_amps=[complex(re, im) for re, im in desc["custom_amps"]])
        return cls("custom", custom_probs=desc["custom_probs"])


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise DimensionError(f"dim must be a positive integer, got {dim!r}")
    return int(dim)


def coherent_amplitudes(alpha0, dim: int) -> np.ndarray:
    """e^{-|a|^2/2} a^n / sqrt(n!) by multiplicative recurrence (no factorials)."""
    dim = _check_dim(dim)
    alpha0 = complex(alpha0)
    amps = np.empty(dim, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha0) ** 2)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha0 / math.sqrt(n)
    return amps


def coherent_vector(alpha0, dim: int) -> FieldVector:
    return FieldVector(coherent_amplitudes(alpha0, dim))


def thermal_probabilities(nbar: float, dim: int) -> np.ndarray:
    """Geometric weights nbar^n / (nbar+1)^(n+1), n < dim."""
    dim = _check_dim(dim)
    if not nbar >= 0:
        raise DomainError(f"nbar must be nonnegative, got {nbar!r}")
    n = np.arange(dim)
    if nbar == 0:
        return (n == 0).astype(float)
    ratio = nbar / (nbar + 1.0)
    return np.exp(n * math.log(ratio)) / (nbar + 1.0)


def thermal_density(nbar: float, dim: int) -> DensityMatrix:
    return DensityMatrix(np.diag(thermal_probabilities(nbar, dim)).astype(complex))


def field_vector(spec: InputFieldSpec, dim: int) -> FieldVector:
    """Amplitude vector for a pure input spec."""
    dim = _check_dim(dim)
    if spec.kind == "coherent":
        return coherent_vector(spec.alpha0, dim)
    if spec.kind == "fock":
        if spec.n >= dim:
            raise DimensionError(f"|{spec.n}> does not fit in dimension {dim}")
        amps = np.zeros(dim, dtype=complex)
        amps[spec.n] = 1.0
        return FieldVector(amps)
    if spec.kind == "custom" and spec.custom_amps is not None:
        amps = np.zeros(dim, dtype=complex)
        src = np.asarray(spec.custom_amps, dtype=complex)[:dim]
        amps[: src.size] = src
        return FieldVector(amps)
    raise DomainError(f"{spec.kind} input with these fields is a mixture, not a vector")


def photon_distribution(spec: InputFieldSpec, dim: int) -> np.ndarray:
    """Input photon-number probabilities p_n for n < dim."""
    dim = _check_dim(dim)
    if spec.kind == "thermal":
        return thermal_probabilities(spec.nbar, dim)
    if spec.kind == "custom" and spec.custom_probs is not None:
        probs = np.zeros(dim)
        src = np.asarray(spec.custom_probs, dtype=float)[:dim]
        probs[: src.size] = src
        return probs
    return np.abs(field_vector(spec, dim).amps) ** 2


def input_density(spec: InputFieldSpec, dim: int) -> DensityMatrix:
    if spec.is_mixed:
        return DensityMatrix(np.diag(photon_distribution(spec, dim)).astype(complex))
    return field_vector(spec, dim).density()


def tail_mass(spec: InputFieldSpec, dim: int) -> float:
    """Probability that the input holds dim or more photons."""
    if spec.kind == "coherent":
        return float(stats.poisson.sf(dim - 1, abs(spec.alpha0) ** 2))
    if spec.kind == "thermal":
        if spec.nbar == 0:
            return 0.0
        return (spec.nbar / (spec.nbar + 1.0)) ** dim
    if spec.kind == "fock":
        return 1.0 if spec.n >= dim else 0.0
    values = spec.custom_probs if spec.custom_probs is not None else spec.custom_amps
    weights = np.asarray(values, dtype=complex)
    if spec.custom_amps is not None:
        weights = np.abs(weights) ** 2
    return float(np.sum(np.abs(weights[dim:])))


def choose_cutoff(spec: InputFieldSpec, tail_tol: float = DEFAULT_TAIL_TOL,
                  headroom: int = DEFAULT_HEADROOM) -> int:
    """Smallest dim whose input tail mass is below ``tail_tol``, plus ``headroom``."""
    if not 0 < tail_tol < 1:
        raise DomainError(f"tail_tol must lie in (0, 1), got {tail_tol!r}")
    if headroom < 0 or int(headroom) != headroom:
        raise DomainError(f"headroom must be a nonnegative integer, got {headroom!r}")
    if spec.kind == "custom":
        values = spec.custom_probs if spec.custom_probs is not None else spec.custom_amps
        if callable(values):
            raise UnsupportedSpecError("custom inputs must be explicit finite lists")
        support = len(values)
    elif spec.kind == "fock":
        return spec.n + 1 + int(headroom)
    elif spec.kind == "thermal":
        if spec.nbar == 0:
            return 1 + int(headroom)
        # (nbar/(nbar+1))^dim < tol
        q = spec.nbar / (spec.nbar + 1.0)
        guess = max(1, int(math.floor(math.log(tail_tol) / math.log(q))) - 2)
        while tail_mass(spec, guess) >= tail_tol:
            guess += 1
        while guess > 1 and tail_mass(spec, guess - 1) < tail_tol:
            guess -= 1
        return guess + int(headroom)
    else:
        mu = abs(spec.alpha0) ** 2
        support = int(mu + 40 * math.sqrt(mu) + 60)
    dim = 1
    while dim < support and tail_mass(spec, dim) >= tail_tol:
        dim += 1
    return dim + int(headroom)
