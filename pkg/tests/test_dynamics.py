import math

import numpy as np
import pytest

from cavityfield.dynamics import (AtomFieldConfig, AtomState, ProtocolTimes, evolve_oracle,
                                  final_field_density, first_pass, oracle_pass_amplitudes,
                                  postselect_ground, run_protocol, second_pass)
from cavityfield.errors import ClosedFormUnsupportedError, DomainError, ZeroNormError
from cavityfield.fock import FieldVector, fock_vector, validate
from cavityfield.states import InputFieldSpec, choose_cutoff, coherent_vector, thermal_probabilities

from oracles import sector_rk4

RES = AtomFieldConfig.resonant(1.0)


def _max_dev(pass_amps, ref):
    return max(np.max(np.abs(pass_amps.c_e - ref[0])), np.max(np.abs(pass_amps.c_i - ref[1])),
               np.max(np.abs(pass_amps.c_g - ref[2])))


def test_first_pass_at_t0():
    field = coherent_vector(2, 30)
    p = first_pass(field, RES, 0.0)
    assert np.allclose(p.c_e[1:], field.amps[1:] / math.sqrt(2), atol=1e-15)
    assert np.allclose(p.c_i, p.c_e) and np.all(p.c_g == 0)


def test_resonant_simplification():
    field = coherent_vector(2, 30)
    n = np.arange(30)
    for t in (0.3, 1.0, 2.7):
        p = first_pass(field, AtomFieldConfig.resonant(0.8), t)
        expected = -1j * field.amps * np.sin(np.sqrt(2 * n) * 0.8 * t)
        assert np.max(np.abs(p.c_g - expected)) < 1e-12
        ref = oracle_pass_amplitudes(evolve_oracle(AtomState(), field, AtomFieldConfig.resonant(0.8), t), 30)
        assert np.max(np.abs(p.c_g - ref["c_g"])) < 1e-10


def test_detuned_single_photon_vs_oracles():
    field = fock_vector(1, 4)
    cfg = AtomFieldConfig(1, 1, 2, 2)
    p = first_pass(field, cfg, 1.0)
    assert _max_dev(p, sector_rk4(field.amps, 1, 1, 2, 2, 1.0)) < 1e-8
    ref = oracle_pass_amplitudes(evolve_oracle(AtomState(), field, cfg, 1.0), 4)
    assert _max_dev(p, (ref["c_e"], ref["c_i"], ref["c_g"])) < 1e-8


@pytest.mark.parametrize("cfg", [AtomFieldConfig(1, 1, 0, 0), AtomFieldConfig(0.7, 1.3, 0, 0),
                                 AtomFieldConfig(1, 1.5, 2, 2), AtomFieldConfig(1.2, 0.9, -1.5, -1.5)])
@pytest.mark.parametrize("t", [0.2, 0.9, 1.7, 2.6, 4.0])
def test_closed_form_sweep_vs_independent_oracle(cfg, t):
    field = coherent_vector(1.5 + 0.5j, 30)
    assert _max_dev(first_pass(field, cfg, t), sector_rk4(field.amps, cfg.g1, cfg.g2, cfg.delta1,
                                                          cfg.delta2, t)) < 1e-8


def test_unequal_detuning_rejected():
    with pytest.raises(ClosedFormUnsupportedError):
        first_pass(coherent_vector(1, 10), AtomFieldConfig(1, 1, 0.5, 1.0), 1.0)


def test_expm_and_ode_agree_for_unequal_detunings():
    field = coherent_vector(1.2, 20)
    cfg = AtomFieldConfig(1.0, 1.5, 2.0, -1.0)
    a = evolve_oracle(AtomState(), field, cfg, 1.3, method="expm")
    b = evolve_oracle(AtomState(), field, cfg, 1.3, method="ode")
    assert np.max(np.abs(a - b)) < 1e-9
    ref = sector_rk4(field.amps, 1.0, 1.5, 2.0, -1.0, 1.3)
    amps = oracle_pass_amplitudes(a, 20)
    assert max(np.max(np.abs(amps[k] - ref[j])) for j, k in enumerate(("c_e", "c_i", "c_g"))) < 1e-9


def test_first_pass_norm_conserved():
    field = coherent_vector(2, 40)
    for cfg in (RES, AtomFieldConfig(1, 1.5, 2, 2)):
        p = first_pass(field, cfg, 1.1)
        assert abs(np.sum(p.sector_norms()) - np.sum(np.abs(field.amps[1:]) ** 2)) < 1e-10


def test_oracle_rabi_flop_and_identity():
    field = fock_vector(1, 3)
    psi = evolve_oracle(AtomState(), field, RES, math.pi / (2 * math.sqrt(2)))
    assert abs(abs(psi[2 * 3 + 1]) ** 2 - 1) < 1e-12
    assert np.array_equal(evolve_oracle(AtomState(), field, RES, 0.0),
                          evolve_oracle(AtomState(), field, RES, 0.0, method="ode"))


def test_postselection():
    field = coherent_vector(2, 40)
    with pytest.raises(ZeroNormError):
        postselect_ground(first_pass(field, RES, 0.0))
    with pytest.raises(ZeroNormError):
        postselect_ground(first_pass(fock_vector(0, 5), RES, 1.0))
    _, prob = postselect_ground(first_pass(field, RES, math.pi / 6))
    direct = sum(math.exp(-4) * 4 ** k / math.factorial(k) * math.sin(math.sqrt(2 * k) * math.pi / 6) ** 2
                 for k in range(40))
    assert abs(prob - direct) < 1e-12
    sel, _ = postselect_ground(first_pass(field, RES, 1.0), "renormalized")
    assert abs(sel.norm2 - 1) < 1e-12
    with pytest.raises(DomainError):
        postselect_ground(first_pass(field, RES, 1.0), "other")


def test_second_pass_examples():
    field = coherent_vector(1, 10)
    p = second_pass(field, 1.0, 0.0)
    assert np.allclose(p.c_e[1:], field.amps[1:] / math.sqrt(2)) and np.all(p.c_g == 0)
    single = FieldVector([0, 1, 0, 0])
    p = second_pass(single, 1.0, math.pi / (2 * math.sqrt(2)))
    assert abs(abs(p.c_g[1]) - 1) < 1e-12 and np.max(np.abs(p.c_e)) < 1e-12


def test_pipeline_per_n_probabilities_vs_oracle():
    spec = InputFieldSpec.coherent(2)
    dim = choose_cutoff(spec)
    times = ProtocolTimes(math.pi, math.pi)
    field = coherent_vector(2, dim)
    first = evolve_oracle(AtomState(), field, RES, times.t1)
    selected = FieldVector(first[2 * dim:])
    joint = evolve_oracle(AtomState(), selected, RES, times.t2)
    probs = np.abs(joint.reshape(3, dim)) ** 2
    field_probs = probs[2].copy()
    field_probs[:-1] += probs[0, :-1] + probs[1, :-1]
    rho = run_protocol(spec, RES, times).rho
    assert np.max(np.abs(np.diag(rho.entries).real - field_probs)) < 1e-8


def test_rho_f_matches_second_pass_pattern():
    field = coherent_vector(2, 40)
    sel, _ = postselect_ground(first_pass(field, RES, math.pi / 6))
    d = second_pass(sel, 1.0, math.pi / 6)
    rho = run_protocol(InputFieldSpec.coherent(2), RES, ProtocolTimes(math.pi / 6, math.pi / 6), dim=40).rho
    expected = np.abs(d.c_g) ** 2
    expected[:-1] += np.abs(d.c_e[1:]) ** 2 + np.abs(d.c_i[1:]) ** 2
    assert np.max(np.abs(np.diag(rho.entries).real - expected)) < 1e-14
    assert abs(rho.trace - np.sum(d.sector_norms())) < 1e-14


@pytest.mark.parametrize("a0", [1.0, 2.0, 3.0])
def test_trace_identity_and_validity(a0):
    spec = InputFieldSpec.coherent(a0)
    dim = choose_cutoff(spec)
    p = np.abs(coherent_vector(a0, dim).amps) ** 2
    n = np.arange(dim)
    for gt in (0.4, 1.9, 3.3, 5.8):
        rho = run_protocol(spec, RES, ProtocolTimes(gt, gt)).rho
        assert abs(rho.trace - np.sum(p * np.sin(np.sqrt(2 * n) * gt) ** 2)) < 1e-10
        assert validate(rho, 1e-9).ok


def test_thermal_is_direct_fock_mixture():
    spec = InputFieldSpec.thermal(1.5)
    dim = choose_cutoff(spec)
    times = ProtocolTimes(0.8, 1.4)
    rho = final_field_density(spec, RES, times)
    assert np.max(np.abs(rho.entries - np.diag(np.diag(rho.entries)))) < 1e-14
    probs = thermal_probabilities(1.5, dim)
    direct = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        direct += probs[n] * run_protocol(InputFieldSpec.fock(n), RES, times, dim=dim).rho.entries
    assert np.max(np.abs(rho.entries - direct)) < 1e-12


def test_detuned_pipeline_uses_oracle_and_stays_valid():
    res = run_protocol(InputFieldSpec.coherent(1.5), AtomFieldConfig(1, 1.5, 1.0, -0.5), ProtocolTimes(1, 1))
    assert res.route == "oracle" and validate(res.rho, 1e-9).ok
    assert abs(res.rho.trace - res.probability) < 1e-9


def test_renormalized_mode_has_unit_trace():
    res = run_protocol(InputFieldSpec.coherent(2), RES, ProtocolTimes(1.0, 2.0), "renormalized")
    assert abs(res.rho.trace - 1) < 1e-12


def test_trace_continuous_towards_zero():
    spec = InputFieldSpec.coherent(2)
    traces = [run_protocol(spec, RES, ProtocolTimes(t, t)).rho.trace for t in (1e-2, 1e-3, 1e-4)]
    assert traces[0] > traces[1] > traces[2] and traces[2] < 1e-6
    with pytest.raises(ZeroNormError):
        run_protocol(spec, RES, ProtocolTimes(0.0, 0.5))
