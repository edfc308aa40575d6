import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from cavityfield.errors import DomainError
from cavityfield.states import (InputFieldSpec, choose_cutoff, coherent_vector, tail_mass,
                                thermal_density, thermal_probabilities)

from oracles import poisson_amplitudes


def test_vacuum_amplitudes():
    assert np.array_equal(coherent_vector(0, 5).amps, [1, 0, 0, 0, 0])


def test_coherent_norm_and_peak():
    v = coherent_vector(2, 40)
    assert abs(v.norm2 - 1) < 1e-12
    assert abs(abs(v.amps[4]) ** 2 - math.exp(-4) * 4 ** 4 / 24) < 1e-15
    assert abs(abs(v.amps[4]) ** 2 - 0.19537) < 1e-5


@pytest.mark.parametrize("alpha0", [0.3, 2.0, 1 - 1.5j, 5.0])
def test_coherent_matches_direct_pmf(alpha0):
    dim = 60
    assert np.max(np.abs(coherent_vector(alpha0, dim).amps - poisson_amplitudes(alpha0, dim))) < 1e-13


def test_coherent_norm_monotone():
    norms = [coherent_vector(2.5, d).norm2 for d in range(1, 40)]
    assert all(b >= a for a, b in zip(norms, norms[1:]))


def test_thermal_examples():
    assert np.array_equal(thermal_density(0, 4).entries.real, np.diag([1, 0, 0, 0]))
    p = thermal_probabilities(1, 200)
    assert p[0] == pytest.approx(0.5) and p[1] == pytest.approx(0.25)
    dim = choose_cutoff(InputFieldSpec.thermal(2), 1e-12)
    assert thermal_probabilities(2, dim).sum() >= 1 - 1e-12


def test_thermal_trace_monotone_and_diagonal():
    traces = [thermal_density(1.5, d).trace for d in range(1, 30)]
    assert all(b >= a for a, b in zip(traces, traces[1:]))
    rho = thermal_density(1.5, 10).entries
    assert np.allclose(np.sort(np.linalg.eigvalsh(rho)), np.sort(np.diag(rho).real))


def test_cutoff_examples():
    assert choose_cutoff(InputFieldSpec.fock(5), 1e-3, 5) == 11
    dim = choose_cutoff(InputFieldSpec.coherent(2), 1e-12, 5)
    assert 10 <= dim < 40
    assert poisson.sf(dim - 1 - 5, 4) < 1e-12
    dim = choose_cutoff(InputFieldSpec.thermal(12), 1e-10, 5)
    core = math.ceil(math.log(1e-10) / math.log(12 / 13))
    assert dim == core + 5 and abs(core - 288) <= 1


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(1e-14, 1e-3), st.floats(1e-14, 1e-3))
def test_cutoff_monotone_in_tol(alpha0, tol_a, tol_b):
    lo, hi = sorted((tol_a, tol_b))
    spec = InputFieldSpec.coherent(alpha0)
    assert choose_cutoff(spec, lo) >= choose_cutoff(spec, hi)
    assert tail_mass(spec, choose_cutoff(spec, lo, 0)) < lo


def test_spec_validation():
    with pytest.raises(DomainError):
        InputFieldSpec.thermal(-1)
    with pytest.raises(DomainError):
        InputFieldSpec.fock(-2)


def test_description_round_trip():
    for spec in (InputFieldSpec.coherent(1 + 2j), InputFieldSpec.thermal(3), InputFieldSpec.fock(4)):
        assert InputFieldSpec.from_description(spec.describe()) == spec
