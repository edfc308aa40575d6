"""Two sequential V-atom transits through the cavity.

Amplitude bookkeeping follows the excitation-manifold convention of the
closed-form solution: the input amplitude ``F_n`` seeds the manifold
{|e,n-1>, |i,n-1>, |g,n>}, so an atom entering in (|e>+|i>)/sqrt(2) starts
from ``F_n/sqrt(2)`` on both |e,n-1> and |i,n-1>. The ``F_0`` component has
no excited partner and drops out of the dynamics. ``embed`` builds the same
joint state for the brute-force oracle; ``convention="product"`` gives the
plain tensor product instead.

Joint vectors are atom-major (see :mod:`cavityfield.fock`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg

from . import fock
from .errors import ClosedFormUnsupportedError, DomainError, ZeroNormError
from .fock import ATOM_INDEX, DensityMatrix, FieldVector
from .states import (DEFAULT_HEADROOM, DEFAULT_TAIL_TOL, InputFieldSpec, choose_cutoff,
                     field_vector, photon_distribution)

MODES = ("paper_faithful", "renormalized")
ZERO_NORM = 1e-14


@dataclass(frozen=True)
class AtomFieldConfig:
    g1: float = 1.0
    g2: float = 1.0
    delta1: float = 0.0
    delta2: float = 0.0

    def __post_init__(self):
        for name in ("g1", "g2"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be a positive real, got {value!r}")
        for name in ("delta1", "delta2"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @classmethod
    def resonant(cls, g=1.0):
        return cls(g, g, 0.0, 0.0)

    @property
    def equal_detuning(self) -> bool:
        return self.delta1 == self.delta2

    @property
    def resonant_equal(self) -> bool:
        return self.g1 == self.g2 and self.delta1 == 0 and self.delta2 == 0


@dataclass(frozen=True)
class ProtocolTimes:
    t1: float
    t2: float

    def __post_init__(self):
        if not (self.t1 >= 0 and self.t2 >= 0):
            raise DomainError(f"transit times must be nonnegative, got {self.t1!r}, {self.t2!r}")


@dataclass(frozen=True)
class AtomState:
    e: complex = 1 / math.sqrt(2)
    i: complex = 1 / math.sqrt(2)
    g: complex = 0.0

    def __post_init__(self):
        norm2 = abs(self.e) ** 2 + abs(self.i) ** 2 + abs(self.g) ** 2
        if abs(norm2 - 1) > 1e-12:
            raise DomainError(f"atomic state must be normalized, |psi|^2 = {norm2!r}")

    @property
    def amps(self) -> np.ndarray:
        return np.array([self.e, self.i, self.g], dtype=complex)


@dataclass(frozen=True)
class PassAmplitudes:
    """Amplitudes after one transit, indexed by manifold n.

    ``c_e[n]`` sits on |e,n-1>, ``c_i[n]`` on |i,n-1>, ``c_g[n]`` on |g,n>;
    ``c_e[0] = c_i[0] = 0``.
    """

    c_e: np.ndarray
    c_i: np.ndarray
    c_g: np.ndarray
    beta1: np.ndarray
    b1: np.ndarray

    def __post_init__(self):
        for name in ("c_e", "c_i", "c_g", "b1"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        beta = np.array(self.beta1, dtype=float)
        beta.flags.writeable = False
        object.__setattr__(self, "beta1", beta)

    @property
    def dim(self) -> int:
        return self.c_g.size

    def joint_vector(self) -> np.ndarray:
        dim = self.dim
        psi = np.zeros(3 * dim, dtype=complex)
        psi[0:dim - 1] = self.c_e[1:]
        psi[dim:2 * dim - 1] = self.c_i[1:]
        psi[2 * dim:] = self.c_g
        return psi

    def sector_norms(self) -> np.ndarray:
        return np.abs(self.c_e) ** 2 + np.abs(self.c_i) ** 2 + np.abs(self.c_g) ** 2


def _phase_integral(omega, t):
    """(exp(i w t) - 1) / w with the w -> 0 limit i t."""
    omega = np.asarray(omega, dtype=float)
    safe = np.where(omega == 0, 1.0, omega)
    return np.where(omega == 0, 1j * t, (np.exp(1j * omega * t) - 1) / safe)


def _closed_form(amps, g1, g2, delta, t) -> PassAmplitudes:
    amps = np.asarray(amps, dtype=complex)
    n = np.arange(amps.size, dtype=float)
    sqrt_n = np.sqrt(n)
    beta = np.sqrt(delta ** 2 / 4 + n * (g1 ** 2 + g2 ** 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        b1 = np.where(n > 0, -np.sqrt(n / 2) * (g1 + g2) / (2 * np.where(beta > 0, beta, 1.0)) * amps, 0)
    w_plus = delta / 2 + beta
    w_minus = delta / 2 - beta
    bracket = _phase_integral(w_plus, t) - _phase_integral(w_minus, t)
    c_e = -g1 * sqrt_n * b1 * bracket + amps / math.sqrt(2)
    c_i = -g2 * sqrt_n * b1 * bracket + amps / math.sqrt(2)
    c_g = b1 * (np.exp(-1j * w_minus * t) - np.exp(-1j * w_plus * t))
    c_e[0] = c_i[0] = 0
    return PassAmplitudes(c_e, c_i, c_g, beta, b1)


def first_pass(field: FieldVector, config: AtomFieldConfig, t1: float) -> PassAmplitudes:
    """Closed-form amplitudes after the first transit (equal detunings only)."""
    if not config.equal_detuning:
        raise ClosedFormUnsupportedError(
            f"closed form needs delta1 == delta2 (got {config.delta1}, {config.delta2}); "
            "use evolve_oracle")
    return _closed_form(field.amps, config.g1, config.g2, config.delta1, t1)


def second_pass(field: FieldVector, g: float, t2: float) -> PassAmplitudes:
    """Resonant, equal-coupling transit of the second atom.

    Evaluated with the same closed form as the first pass at zero detuning,
    which reduces to D_e = D_i = amps cos(sqrt(2n) g t2)/sqrt(2) and
    D_g = -i amps sin(sqrt(2n) g t2).
    """
    if not g > 0:
        raise DomainError(f"g must be positive, got {g!r}")
    return _closed_form(field.amps, g, g, 0.0, t2)


def second_pass_printed(field: FieldVector, g: float, t1: float, t2: float) -> PassAmplitudes:
    """Second-pass amplitudes transcribed as printed, in terms of the input ``F_n``."""
    amps = field.amps
    n = np.arange(amps.size)
    w = np.sqrt(2 * n) * g
    c_g = first_pass(field, AtomFieldConfig.resonant(g), t1).c_g
    d_e = c_g * np.cos(w * t2) / math.sqrt(2)
    d_e[0] = 0
    d_g = -amps * np.sin(w * t1) * np.sin(w * t2)
    return PassAmplitudes(d_e, d_e.copy(), d_g, w, np.zeros_like(amps))


def postselect_ground(pass_amps: PassAmplitudes, mode: str = "paper_faithful"):
    """Project the atom onto |g>. Returns ``(FieldVector, probability)``."""
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    amps = np.array(pass_amps.c_g)
    probability = float(np.vdot(amps, amps).real)
    if probability < ZERO_NORM:
        raise ZeroNormError(
            f"ground-state post-selection probability {probability:.3e} is zero "
            "(t1 = 0 or no input support on n >= 1)", probability)
    if mode == "renormalized":
        amps = amps / math.sqrt(probability)
    return FieldVector(amps), probability


# --- brute-force oracle ---------------------------------------------------

def embed(atom: AtomState, field: FieldVector, convention: str = "sector") -> np.ndarray:
    """Joint atom-major initial vector for ``atom`` entering ``field``."""
    dim = field.dim
    psi = np.zeros(3 * dim, dtype=complex)
    amps = field.amps
    if convention == "product":
        return np.kron(atom.amps, amps)
    if convention != "sector":
        raise DomainError(f"unknown embedding convention {convention!r}")
    psi[0:dim - 1] = atom.e * amps[1:]
    psi[dim:2 * dim - 1] = atom.i * amps[1:]
    psi[2 * dim:] = atom.g * amps
    return psi


def _couplings(dim):
    a = fock.make_annihilation(dim).entries
    raise_e = np.zeros((3, 3))
    raise_e[ATOM_INDEX["e"], ATOM_INDEX["g"]] = 1
    raise_i = np.zeros((3, 3))
    raise_i[ATOM_INDEX["i"], ATOM_INDEX["g"]] = 1
    # |e><g| a and |i><g| a
    return np.kron(raise_e, a), np.kron(raise_i, a)


def interaction_hamiltonian(config: AtomFieldConfig, dim: int, t: float) -> np.ndarray:
    """Time-dependent RWA interaction Hamiltonian on the atom-major joint space."""
    up_e, up_i = _couplings(dim)
    h = (config.g1 * np.exp(1j * config.delta1 * t) * up_e
         + config.g2 * np.exp(1j * config.delta2 * t) * up_i)
    return h + h.conj().T


def _evolve_expm(psi0, config, dim, t):
    # In the frame c_e -> e^{i d1 t} c_e, c_i -> e^{i d2 t} c_i the generator is constant.
    up_e, up_i = _couplings(dim)
    coupling = config.g1 * up_e + config.g2 * up_i
    detuning = np.concatenate([np.full(dim, config.delta1), np.full(dim, config.delta2),
                               np.zeros(dim)])
    h_rot = coupling + coupling.conj().T + np.diag(detuning)
    psi = linalg.expm(-1j * t * h_rot) @ psi0
    return np.exp(1j * detuning * t) * psi


def _evolve_ode(psi0, config, dim, t, rtol=1e-12, atol=1e-14):
    up_e, up_i = _couplings(dim)
    g1, g2, d1, d2 = config.g1, config.g2, config.delta1, config.delta2

    def rhs(time, y):
        h = g1 * np.exp(1j * d1 * time) * up_e + g2 * np.exp(1j * d2 * time) * up_i
        return -1j * (h @ y + h.conj().T @ y)

    sol = integrate.solve_ivp(rhs, (0.0, t), psi0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"oracle integration failed: {sol.message}")
    return sol.y[:, -1]


def evolve_oracle(atom: AtomState, field: FieldVector, config: AtomFieldConfig, t: float,
                  convention: str = "sector", method: str = "auto") -> np.ndarray:
    """Joint state after time ``t``, by direct solution of the Schrodinger equation.

    ``method="expm"`` exponentiates the rotating-frame generator (exact for any
    detunings); ``"ode"`` integrates the time-dependent Hamiltonian with an
    adaptive 8th-order Runge-Kutta; ``"auto"`` picks expm for equal detunings.
    """
    psi0 = embed(atom, field, convention)
    if t == 0:
        return psi0
    if method == "auto":
        method = "expm" if config.equal_detuning else "ode"
    if method == "expm":
        return _evolve_expm(psi0, config, field.dim, t)
    if method == "ode":
        return _evolve_ode(psi0, config, field.dim, t)
    raise DomainError(f"unknown oracle method {method!r}")


def oracle_pass_amplitudes(joint: np.ndarray, dim: int) -> dict:
    """Split an atom-major joint vector into the manifold-indexed branches."""
    c_e = np.zeros(dim, dtype=complex)
    c_i = np.zeros(dim, dtype=complex)
    c_e[1:] = joint[0:dim - 1]
    c_i[1:] = joint[dim:2 * dim - 1]
    return {"c_e": c_e, "c_i": c_i, "c_g": np.array(joint[2 * dim:3 * dim])}


# --- full protocol --------------------------------------------------------

@dataclass(frozen=True)
class ProtocolResult:
    rho: DensityMatrix
    probability: float
    dim: int
    mode: str
    route: str


def _check_mode(mode):
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")


def _pure_pipeline(amps, config, times):
    """Faithful-mode joint vector after both transits, and the post-selection probability."""
    field = FieldVector(amps)
    dim = field.dim
    if config.resonant_equal:
        after_first = first_pass(field, config, times.t1)
        selected, probability = postselect_ground(after_first)
        joint = second_pass(selected, config.g1, times.t2).joint_vector()
        return joint, probability, "closed_form"
    atom = AtomState()
    first = evolve_oracle(atom, field, config, times.t1)
    selected, probability = postselect_ground(
        PassAmplitudes(np.zeros(dim), np.zeros(dim), first[2 * dim:], np.zeros(dim), np.zeros(dim)))
    joint = evolve_oracle(atom, selected, config, times.t2)
    return joint, probability, "oracle"


def _joint_to_field(joint, dim):
    rho = DensityMatrix(np.outer(joint, joint.conj()), "atom*field", (3, dim))
    return fock.partial_trace(rho, (3, dim), keep="field")


def run_protocol(spec: InputFieldSpec, config: AtomFieldConfig, times: ProtocolTimes,
                 mode: str = "paper_faithful", dim: int = None,
                 tail_tol: float = DEFAULT_TAIL_TOL, headroom: int = DEFAULT_HEADROOM) -> ProtocolResult:
    """Final cavity field after both transits, plus bookkeeping."""
    _check_mode(mode)
    if dim is None:
        dim = choose_cutoff(spec, tail_tol, headroom)
    if not spec.is_mixed:
        joint, probability, route = _pure_pipeline(field_vector(spec, dim).amps, config, times)
        rho = _joint_to_field(joint, dim)
    else:
        rho, probability, route = _mixture_pipeline(photon_distribution(spec, dim), config, times)
    if mode == "renormalized":
        rho = rho.scaled(1.0 / probability)
    return ProtocolResult(rho, probability, dim, mode, route)


def _mixture_pipeline(probs, config, times):
    # Each Fock component stays within levels <= n, so it runs in a small space.
    dim = probs.size
    total = np.zeros((dim, dim), dtype=complex)
    probability = 0.0
    route = "closed_form" if config.resonant_equal else "oracle"
    for n in range(dim):
        weight = probs[n]
        if weight == 0:
            continue
        local = min(n + 2, dim)
        amps = np.zeros(local, dtype=complex)
        amps[n] = 1.0
        try:
            joint, p_n, _ = _pure_pipeline(amps, config, times)
        except ZeroNormError:
            continue
        total[:local, :local] += weight * _joint_to_field(joint, local).entries
        probability += weight * p_n
    if probability < ZERO_NORM:
        raise ZeroNormError(
            f"ground-state post-selection probability {probability:.3e} is zero "
            "(t1 = 0 or no input support on n >= 1)", probability)
    return DensityMatrix(total), probability, route


def final_field_density(spec: InputFieldSpec, config: AtomFieldConfig, times: ProtocolTimes,
                        mode: str = "paper_faithful", dim: int = None,
                        tail_tol: float = DEFAULT_TAIL_TOL,
                        headroom: int = DEFAULT_HEADROOM) -> DensityMatrix:
    return run_protocol(spec, config, times, mode, dim, tail_tol, headroom).rho
