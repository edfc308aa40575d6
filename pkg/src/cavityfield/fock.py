"""Truncated Fock-space linear algebra.

States and operators are dense numpy arrays wrapped in small frozen
dataclasses. Composite atom-field objects use the atom-major index
``atom_index * dim_field + fock_index`` with atom basis order (e, i, g).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

ATOM_LEVELS = ("e", "i", "g")
ATOM_INDEX = {name: k for k, name in enumerate(ATOM_LEVELS)}
DEFAULT_TOL = 1e-10


def _frozen(array, dtype=complex):
    arr = np.array(array, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FieldVector:
    """Fock-basis amplitudes ``amps[n]`` on |0>..|dim-1>. May be sub-normalized."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.ndim != 1 or amps.size == 0:
            raise DimensionError(f"FieldVector needs a non-empty 1-d array, got shape {amps.shape}")
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amps, self.amps.conj()))


@dataclass(frozen=True)
class FieldOperator:
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise DimensionError(f"operator must be square and non-empty, got {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def dag(self) -> "FieldOperator":
        return FieldOperator(self.entries.conj().T)

    def __matmul__(self, other):
        if isinstance(other, FieldOperator):
            _check_dims(self.dim, other.dim)
            return FieldOperator(self.entries @ other.entries)
        if isinstance(other, FieldVector):
            _check_dims(self.dim, other.dim)
            return FieldVector(self.entries @ other.amps)
        return NotImplemented


@dataclass(frozen=True)
class DensityMatrix:
    """Dense density matrix. ``label`` is ``"field"`` or ``"atom*field"``.

    Trace may be below one: post-selected states are kept unnormalized
    unless a caller asks otherwise.
    """

    entries: np.ndarray
    label: str = "field"
    subsystem_dims: tuple = field(default=None)

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise DimensionError(f"density matrix must be square and non-empty, got {entries.shape}")
        object.__setattr__(self, "entries", entries)
        dims = self.subsystem_dims
        if dims is None:
            dims = (entries.shape[0],)
        dims = tuple(int(d) for d in dims)
        if int(np.prod(dims)) != entries.shape[0]:
            raise DimensionError(f"subsystem dims {dims} do not multiply to {entries.shape[0]}")
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.entries / self.trace, self.label, self.subsystem_dims)

    def __add__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        _check_dims(self.dim, other.dim)
        return DensityMatrix(self.entries + other.entries, self.label, self.subsystem_dims)

    def scaled(self, factor) -> "DensityMatrix":
        return DensityMatrix(factor * self.entries, self.label, self.subsystem_dims)


def _check_dims(a, b):
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} vs {b}")


def make_annihilation(dim: int) -> FieldOperator:
    """Matrix of ``a`` on |0>..|dim-1>: ``entries[n-1, n] = sqrt(n)``."""
    if int(dim) != dim or dim < 1:
        raise DimensionError(f"dim must be a positive integer, got {dim!r}")
    dim = int(dim)
    return FieldOperator(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex))


def make_creation(dim: int) -> FieldOperator:
    return make_annihilation(dim).dag


def make_number(dim: int) -> FieldOperator:
    if int(dim) != dim or dim < 1:
        raise DimensionError(f"dim must be a positive integer, got {dim!r}")
    return FieldOperator(np.diag(np.arange(int(dim), dtype=float)).astype(complex))


def fock_vector(n: int, dim: int) -> FieldVector:
    if not 0 <= n < dim:
        raise DimensionError(f"|{n}> does not fit in dimension {dim}")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return FieldVector(amps)


def joint_index(atom, fock: int, dim_field: int) -> int:
    if isinstance(atom, str):
        atom = ATOM_INDEX[atom]
    return atom * dim_field + fock


def partial_trace(joint: DensityMatrix, subsystem_dims=None, keep: str = "field") -> DensityMatrix:
    """Reduce an atom-major ``(dA*dF)`` density matrix to one subsystem."""
    if subsystem_dims is None:
        subsystem_dims = joint.subsystem_dims
    if len(subsystem_dims) != 2:
        raise DimensionError(f"need (dA, dF), got {subsystem_dims!r}")
    d_atom, d_field = (int(d) for d in subsystem_dims)
    if d_atom * d_field != joint.dim:
        raise DimensionError(f"joint dim {joint.dim} != {d_atom}*{d_field}")
    blocks = joint.entries.reshape(d_atom, d_field, d_atom, d_field)
    if keep == "field":
        return DensityMatrix(np.einsum("ajak->jk", blocks), "field")
    if keep == "atom":
        return DensityMatrix(np.einsum("ajbj->ab", blocks), "atom")
    raise ValueError(f"keep must be 'field' or 'atom', got {keep!r}")


def expectation(rho: DensityMatrix, op: FieldOperator) -> complex:
    """Tr(rho @ op)."""
    _check_dims(rho.dim, op.dim)
    # Tr(AB) = sum_ij A_ij B_ji
    return complex(np.sum(rho.entries * op.entries.T))


@dataclass(frozen=True)
class Diagnostics:
    hermiticity_defect: float
    min_eigenvalue: float
    trace: float
    trace_imag: float
    tol: float
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(rho: DensityMatrix, tol: float = DEFAULT_TOL) -> Diagnostics:
    """Report hermiticity, positivity and trace of ``rho``; never raises."""
    m = rho.entries
    herm = float(np.max(np.abs(m - m.conj().T)))
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))))
    tr = np.trace(m)
    violations = []
    if herm > tol:
        violations.append(f"hermiticity defect {herm:.3e} > {tol:.1e}")
    if min_eig < -tol:
        violations.append(f"min eigenvalue {min_eig:.3e} < -{tol:.1e}")
    if abs(tr.imag) > tol:
        violations.append(f"trace has imaginary part {tr.imag:.3e}")
    if not 0 < tr.real <= 1 + max(tol, 1e-9):
        violations.append(f"trace {tr.real:.12g} outside (0, 1]")
    return Diagnostics(herm, min_eig, float(tr.real), float(tr.imag), tol, tuple(violations))
