"""Engine self-consistency suite and printed-formula discrepancy audit.

Checks in the ``oracle`` and ``invariants`` groups decide the exit status.
Discrepancies against the printed closed forms and qualitative figure claims
are measured and reported but never fail a run.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import __version__, fock
from .dynamics import (AtomFieldConfig, AtomState, ProtocolTimes, evolve_oracle, first_pass,
                       oracle_pass_amplitudes, postselect_ground, run_protocol, second_pass,
                       second_pass_printed)
from .errors import ZeroNormError
from .fock import DensityMatrix, fock_vector
from .quasiprob import (PhaseSpaceGrid, _series, closed_form_reference, eval_grid,
                        husimi_values, quadrature_integral, wigner_values)
from .states import (InputFieldSpec, choose_cutoff, coherent_vector, field_vector,
                     photon_distribution, tail_mass, thermal_density)
from .statistics import (closed_moment_sums, mandel_q, moments, quadrature_variance,
                         squeezing_opt)

PI = math.pi
AUDIT_ALPHAS = np.array([0, 0.5, 1 + 0.5j, -1.2 + 0.3j, 2.0, 0.3 - 1.1j])
AUDIT_COHERENT = [(2.0, PI / 6, PI / 6), (2.0, 1.0, 1.0), (2.0, PI / 2, 3 * PI / 2)]
AUDIT_THERMAL = [(2.0, 2 * PI / 3, 2 * PI / 3), (2.0, 1.0, 1.0)]
RESONANT = AtomFieldConfig.resonant(1.0)


class Suite:
    def __init__(self):
        self.checks = []
        self.discrepancies = []
        self.claims = []

    def check(self, name, group, value, tol, passed=None, detail=None):
        value = float(value)
        if passed is None:
            passed = bool(np.isfinite(value) and value <= tol)
        self.checks.append({"name": name, "group": group, "passed": bool(passed), "value": value,
                            "tol": tol, "detail": detail})
        return passed

    def guarded(self, name, group, fn):
        try:
            fn()
        except Exception as exc:  # a crashing check is a failing check
            self.checks.append({"name": name, "group": group, "passed": False, "value": None,
                                "tol": None, "detail": f"{type(exc).__name__}: {exc}"})

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks)


def _max_abs(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _rel_dev(reference, engine):
    reference, engine = np.asarray(reference), np.asarray(engine)
    scale = np.maximum(np.abs(engine), 1e-300)
    with np.errstate(invalid="ignore", over="ignore"):
        rel = np.abs(reference - engine) / scale
    return float(np.max(rel)) if np.all(np.isfinite(rel)) else float("inf")


def _first_pass_vs_oracle(spec, config, t, method="auto"):
    dim = choose_cutoff(spec)
    field = field_vector(spec, dim)
    closed = first_pass(field, config, t)
    oracle = oracle_pass_amplitudes(evolve_oracle(AtomState(), field, config, t, method=method), dim)
    return max(_max_abs(closed.c_e, oracle["c_e"]), _max_abs(closed.c_i, oracle["c_i"]),
               _max_abs(closed.c_g, oracle["c_g"]))


def first_pass_oracle_sweep(configs, inputs, times, method="auto"):
    worst = 0.0
    count = 0
    for config in configs:
        for spec in inputs:
            for t in times:
                worst = max(worst, _first_pass_vs_oracle(spec, config, t, method))
                count += 1
    return worst, count


def _oracle_checks(suite, level):
    inputs = [InputFieldSpec.fock(1), InputFieldSpec.fock(5), InputFieldSpec.coherent(2)]
    times = [0.3, 1.2, PI / math.sqrt(2), 2.5]
    resonant = [AtomFieldConfig.resonant(1.0), AtomFieldConfig.resonant(0.7)]
    worst, count = first_pass_oracle_sweep(resonant, inputs, times)
    suite.check("first_pass_vs_oracle_resonant", "oracle", worst, 1e-8, detail=f"{count} points")
    detuned = [AtomFieldConfig(1.0, 1.5, 2.0, 2.0)]
    worst, count = first_pass_oracle_sweep(detuned, inputs, times)
    suite.check("first_pass_vs_oracle_detuned", "oracle", worst, 1e-6, detail=f"{count} points")

    # second transit: post-selected field through the resonant oracle
    worst = 0.0
    for a0, gt1, gt2 in [(2.0, PI / 6, PI / 6), (1.0, 1.0, 2.0), (3.0, PI, PI)]:
        field = coherent_vector(a0, choose_cutoff(InputFieldSpec.coherent(a0)))
        selected, _ = postselect_ground(first_pass(field, RESONANT, gt1))
        closed = second_pass(selected, 1.0, gt2)
        oracle = oracle_pass_amplitudes(evolve_oracle(AtomState(), selected, RESONANT, gt2), field.dim)
        worst = max(worst, _max_abs(closed.c_e, oracle["c_e"]), _max_abs(closed.c_g, oracle["c_g"]))
    suite.check("second_pass_vs_oracle", "oracle", worst, 1e-8)

    field = coherent_vector(1.5, 30)
    psi0 = evolve_oracle(AtomState(), field, RESONANT, 0.0)
    suite.check("oracle_identity_at_t0", "oracle",
                _max_abs(psi0, evolve_oracle(AtomState(), field, RESONANT, 0.0, method="ode")), 0.0)
    drift = 0.0
    for cfg in (RESONANT, AtomFieldConfig(1.0, 1.5, 2.0, -1.0)):
        for t in (0.7, 2.9):
            psi = evolve_oracle(AtomState(), field, cfg, t)
            drift = max(drift, abs(np.vdot(psi, psi).real - np.vdot(psi0, psi0).real))
    suite.check("oracle_unitarity", "oracle", drift, 1e-10)

    if level == "full":
        g = 1.0
        detuned_2g = [AtomFieldConfig(g, g, 2 * g, 2 * g), AtomFieldConfig(g, 1.5 * g, 2 * g, 2 * g)]
        worst, count = first_pass_oracle_sweep(detuned_2g, inputs, times, method="ode")
        suite.check("first_pass_vs_ode_oracle_detuned_2g", "oracle", worst, 1e-8,
                    detail=f"{count} points, adaptive integrator")
        worst = 0.0
        for cfg in (AtomFieldConfig(1.0, 1.5, 2.0, -1.0), AtomFieldConfig(0.8, 1.2, 0.5, 3.0)):
            for t in (0.4, 1.7, 3.3):
                a = evolve_oracle(AtomState(), field, cfg, t, method="expm")
                b = evolve_oracle(AtomState(), field, cfg, t, method="ode")
                worst = max(worst, _max_abs(a, b))
        suite.check("unequal_detuning_expm_vs_ode", "oracle", worst, 1e-8)


def _invariant_checks(suite, level):
    dim = 5
    product = np.zeros(3 * dim)
    product[fock.joint_index("g", 2, dim)] = 1
    reduced = fock.partial_trace(DensityMatrix(np.outer(product, product), "atom*field", (3, dim)))
    suite.check("partial_trace_product_state", "invariants",
                _max_abs(reduced.entries, fock_vector(2, dim).density().entries), 1e-12)
    bell = np.zeros(3 * dim)
    bell[fock.joint_index("e", 0, dim)] = bell[fock.joint_index("g", 1, dim)] = 1 / math.sqrt(2)
    reduced = fock.partial_trace(DensityMatrix(np.outer(bell, bell), "atom*field", (3, dim)))
    expected = np.zeros((dim, dim))
    expected[0, 0] = expected[1, 1] = 0.5
    suite.check("partial_trace_bell_state", "invariants", _max_abs(reduced.entries, expected), 1e-12)

    worst_trace = 0.0
    worst_valid = 0.0
    for a0 in (1.0, 2.0, 3.0):
        spec = InputFieldSpec.coherent(a0)
        dim = choose_cutoff(spec)
        p = np.abs(coherent_vector(a0, dim).amps) ** 2
        n = np.arange(dim)
        for gt in np.linspace(0.3, 6.0, 10):
            res = run_protocol(spec, RESONANT, ProtocolTimes(gt, gt))
            identity = np.sum(p * np.sin(np.sqrt(2 * n) * gt) ** 2)
            worst_trace = max(worst_trace, abs(res.rho.trace - identity))
            diag = fock.validate(res.rho, 1e-9)
            worst_valid = max(worst_valid, 0.0 if diag.ok else 1.0)
    suite.check("trace_identity_coherent", "invariants", worst_trace, 1e-10)
    suite.check("rho_f_hermitian_psd", "invariants", worst_valid, 0.0)

    nbars = (2.0, 12.0) if level == "full" else (2.0,)
    for nbar in nbars:
        res = run_protocol(InputFieldSpec.thermal(nbar), RESONANT, ProtocolTimes(2 * PI / 3, 2 * PI / 3))
        off = res.rho.entries - np.diag(np.diag(res.rho.entries))
        suite.check(f"thermal_rho_f_diagonal_nbar{nbar:g}", "invariants", np.max(np.abs(off)), 1e-14)
        probs = photon_distribution(InputFieldSpec.thermal(nbar), res.dim)
        n = np.arange(res.dim)
        identity = np.sum(probs * np.sin(np.sqrt(2 * n) * 2 * PI / 3) ** 2)
        suite.check(f"trace_identity_thermal_nbar{nbar:g}", "invariants", abs(res.rho.trace - identity),
                    1e-10)
        suite.check(f"thermal_rho_f_valid_nbar{nbar:g}", "invariants",
                    0.0 if fock.validate(res.rho, 1e-9).ok else 1.0, 0.0)

    cut = choose_cutoff(InputFieldSpec.thermal(12.0), 1e-10, 0)
    geometric = math.ceil(math.log(1e-10) / math.log(12 / 13))
    suite.check("thermal_cutoff_geometric_tail", "invariants", abs(cut - geometric), 0,
                detail=f"dim {cut}, tail {tail_mass(InputFieldSpec.thermal(12.0), cut):.3e}")

    # phase-space normalization and bounds
    n_grid = 161 if level == "full" else 121
    grid = PhaseSpaceGrid.square(6.0, n_grid)
    for label, spec, t in (("fig2a", InputFieldSpec.coherent(2.0), PI / 6),
                           ("fig3a", InputFieldSpec.thermal(2.0), 2 * PI / 3)):
        rho = run_protocol(spec, RESONANT, ProtocolTimes(t, t)).rho
        q = eval_grid(rho, grid, "husimi")
        w = eval_grid(rho, grid, "wigner")
        suite.check(f"husimi_normalization_{label}", "invariants",
                    abs(quadrature_integral(q) - rho.trace), 1e-3)
        suite.check(f"wigner_normalization_{label}", "invariants",
                    abs(quadrature_integral(w) - rho.trace), 1e-3)
        suite.check(f"husimi_nonnegative_{label}", "invariants", -q.values.min(), 1e-12)
        suite.check(f"wigner_bound_{label}", "invariants",
                    np.max(np.abs(w.values)) - 2 / PI * rho.trace, 1e-9)
        sample = (grid.re[::20][:, None] + 1j * grid.im[::20][None, :]).ravel()
        _, imag = wigner_values(rho, sample, True)
        suite.check(f"wigner_imag_residue_{label}", "invariants", np.max(np.abs(imag)), 1e-12)

    vac = fock_vector(0, 8).density()
    one = fock_vector(1, 8).density()
    suite.check("landmark_vacuum_wigner", "invariants", abs(wigner_values(vac, [0])[0] - 2 / PI), 1e-10)
    suite.check("landmark_vacuum_husimi", "invariants", abs(husimi_values(vac, [0])[0] - 1 / PI), 1e-10)
    suite.check("landmark_fock1_wigner", "invariants", abs(wigner_values(one, [0])[0] + 2 / PI), 1e-10)
    coh = coherent_vector(2.0, 60).density()
    suite.check("landmark_coherent_mandel", "invariants", abs(mandel_q(moments(coh))), 1e-8)
    thermal = thermal_density(2.0, choose_cutoff(InputFieldSpec.thermal(2.0)))
    suite.check("landmark_thermal_mandel", "invariants", abs(mandel_q(moments(thermal)) - 2.0), 1e-6)
    suite.check("landmark_fock_mandel", "invariants",
                abs(mandel_q(moments(fock_vector(3, 8).density())) + 1.0), 1e-12)
    m = moments(thermal)
    suite.check("landmark_diagonal_s_opt", "invariants", abs(squeezing_opt(m).s_opt - 2 * m.mean_n), 1e-10)

    thetas = np.linspace(0, PI, 3601)
    worst_scan = 0.0
    worst_mandel = 0.0
    for a0, gt1, gt2 in AUDIT_COHERENT:
        rho = run_protocol(InputFieldSpec.coherent(a0), RESONANT, ProtocolTimes(gt1, gt2)).rho
        m = moments(rho)
        for norm in ("paper_faithful", "renormalized"):
            scan = np.min(quadrature_variance(m, thetas, norm))
            res = squeezing_opt(m, norm)
            mn = m.normalized(norm)
            # a grid of step pi/3600 can miss the minimum by up to 4|A| (pi/7200)^2
            slack = 4 * abs(mn.adag2 - mn.adag ** 2) * (PI / 7200) ** 2
            worst_scan = max(worst_scan, abs(res.s_opt - scan) if scan < res.s_opt
                             else max(0.0, scan - res.s_opt - slack),
                             abs(quadrature_variance(m, res.theta_min, norm) - res.s_opt))
        worst_mandel = max(worst_mandel, -1.0 - mandel_q(m, "renormalized"))
    suite.check("s_opt_theta_scan", "invariants", worst_scan, 1e-8)
    suite.check("mandel_lower_bound", "invariants", worst_mandel, 1e-9)


def _audit(suite, cutoff=80):
    """Printed closed forms against the engine over a fixed sample set."""
    for kind, engine_fn in (("q_coh", husimi_values), ("w_coh", wigner_values)):
        worst = 0.0
        worst_abs = 0.0
        for a0, t1, t2 in AUDIT_COHERENT:
            rho = run_protocol(InputFieldSpec.coherent(a0), RESONANT, ProtocolTimes(t1, t2)).rho
            ref = closed_form_reference(kind, {"alpha0": a0, "t1": t1, "t2": t2}, AUDIT_ALPHAS, cutoff)
            eng = engine_fn(rho, AUDIT_ALPHAS)
            worst = max(worst, _rel_dev(ref, eng))
            worst_abs = max(worst_abs, _max_abs(ref, eng))
        suite.discrepancies.append({"name": kind, "reference": "printed " + kind,
                                    "max_rel_deviation": worst, "max_abs_deviation": worst_abs,
                                    "expected_agreement": False})
    for kind, engine_fn in (("q_thm", husimi_values), ("w_thm", wigner_values)):
        worst = 0.0
        worst_abs = 0.0
        for nbar, t1, t2 in AUDIT_THERMAL:
            rho = run_protocol(InputFieldSpec.thermal(nbar), RESONANT, ProtocolTimes(t1, t2)).rho
            ref = closed_form_reference(kind, {"nbar": nbar, "t1": t1, "t2": t2}, AUDIT_ALPHAS, cutoff)
            eng = engine_fn(rho, AUDIT_ALPHAS)
            worst = max(worst, _rel_dev(ref, eng))
            worst_abs = max(worst_abs, _max_abs(ref, eng))
        suite.discrepancies.append({"name": kind, "reference": "printed " + kind,
                                    "max_rel_deviation": worst, "max_abs_deviation": worst_abs,
                                    "expected_agreement": False})
    _audit_q_thm_split(suite, cutoff)

    worst = {"mean_n": 0.0, "second_factorial": 0.0, "adag": 0.0, "adag2": 0.0}
    worst_abs = dict.fromkeys(worst, 0.0)
    for a0, t1, t2 in AUDIT_COHERENT + [(1.0, 1.0, 1.0), (3.0, 0.4, 0.9)]:
        spec = InputFieldSpec.coherent(a0)
        rho = run_protocol(spec, RESONANT, ProtocolTimes(t1, t2)).rho
        eng = moments(rho)
        ref = closed_moment_sums(spec, 1.0, t1, t2, dim=rho.dim)
        for key in worst:
            worst[key] = max(worst[key], _rel_dev(getattr(ref, key), getattr(eng, key)))
            worst_abs[key] = max(worst_abs[key], abs(getattr(ref, key) - getattr(eng, key)))
    for key in worst:
        expected = key in ("mean_n", "second_factorial")
        suite.discrepancies.append({
            "name": f"moment_sum_{key}", "reference": "printed moment sum",
            "max_rel_deviation": worst[key], "max_abs_deviation": worst_abs[key],
            "expected_agreement": expected,
            "agrees_1e-10": worst_abs[key] <= 1e-10})

    worst = 0.0
    for a0, t1, t2 in AUDIT_COHERENT:
        field = coherent_vector(a0, choose_cutoff(InputFieldSpec.coherent(a0)))
        selected, _ = postselect_ground(first_pass(field, RESONANT, t1))
        composed = second_pass(selected, 1.0, t2)
        printed = second_pass_printed(field, 1.0, t1, t2)
        worst = max(worst, _max_abs(composed.c_e, printed.c_e), _max_abs(composed.c_g, printed.c_g))
    suite.discrepancies.append({"name": "second_pass_printed", "reference": "printed D coefficients",
                                "max_rel_deviation": None, "max_abs_deviation": worst,
                                "expected_agreement": True, "agrees_1e-10": worst <= 1e-10})


def _audit_q_thm_split(suite, cutoff):
    """Locate the thermal-Q discrepancy: second sum exact, first sum off by nbar/(nbar+1)."""
    alphas = AUDIT_ALPHAS[AUDIT_ALPHAS != 0]
    worst_second = 0.0
    ratios = []
    for nbar, t1, t2 in AUDIT_THERMAL:
        rho = run_protocol(InputFieldSpec.thermal(nbar), RESONANT, ProtocolTimes(t1, t2)).rho
        engine = husimi_values(rho, alphas)
        p = np.real(np.diag(rho.entries))
        dim = p.size
        n = np.arange(dim)
        s1 = np.sin(np.sqrt(2 * n) * t1)
        s2 = np.sin(np.sqrt(2 * n) * t2)
        probs = photon_distribution(InputFieldSpec.thermal(nbar), dim)
        # engine's |g,n> branch weight per Fock level
        second_weights = probs * s1 ** 2 * s2 ** 2
        x2 = np.abs(alphas) ** 2
        kernel = np.exp(-x2)[None, :] * np.exp(n[:, None] * np.log(x2)[None, :]
                                              - np.array([math.lgamma(k + 1) for k in n])[:, None])
        engine_second = second_weights @ kernel / PI
        engine_first = engine - engine_second
        z = nbar * x2 / (nbar + 1)
        pref = np.exp(-x2) / (PI * (nbar + 1))
        lit_total = closed_form_reference("q_thm", {"nbar": nbar, "t1": t1, "t2": t2}, alphas, cutoff)
        first_only = np.append((s1 ** 2 * np.cos(np.sqrt(2 * n) * t2) ** 2)[1:], 0.0)[:cutoff]
        lit_first = pref * _series(z, first_only).real
        lit_second = lit_total - lit_first
        worst_second = max(worst_second, _max_abs(lit_second, engine_second))
        ratios.extend((engine_first / lit_first / (nbar / (nbar + 1))).tolist())
    suite.discrepancies.append({
        "name": "q_thm_second_sum", "reference": "printed q_thm, sin^4 sum only",
        "max_rel_deviation": None, "max_abs_deviation": worst_second,
        "expected_agreement": True, "agrees_1e-10": worst_second <= 1e-10})
    suite.discrepancies.append({
        "name": "q_thm_first_sum_ratio", "reference": "engine/printed first sum divided by nbar/(nbar+1)",
        "max_rel_deviation": float(np.max(np.abs(np.array(ratios) - 1))), "max_abs_deviation": None,
        "expected_agreement": True,
        "agrees_1e-10": bool(np.max(np.abs(np.array(ratios) - 1)) <= 1e-10)})


def _claims(suite, level):
    """Qualitative figure claims, recorded with the engine's actual values."""
    grid = PhaseSpaceGrid(-4, 4, -4, 4, 121 if level == "full" else 61, 121 if level == "full" else 61)
    minima = []
    for t1, t2 in ((PI / 2, 3 * PI / 2), (PI / 2, 5 * PI / 2), (3 * PI / 2, 7 * PI / 2),
                   (5 * PI / 2, 7 * PI / 2)):
        rho = run_protocol(InputFieldSpec.coherent(2.0), RESONANT, ProtocolTimes(t1, t2)).rho
        minima.append(float(eval_grid(rho, grid, "wigner").values.min()))
    suite.claims.append({"claim": "coherent Wigner negativity deepens across fig4a-d",
                         "minima": minima, "all_negative": all(v < 0 for v in minima),
                         "monotone_deepening": all(b < a for a, b in zip(minima, minima[1:]))})
    rho = run_protocol(InputFieldSpec.thermal(2.0), RESONANT, ProtocolTimes(2 * PI / 3, 2 * PI / 3)).rho
    w_min = float(eval_grid(rho, grid, "wigner").values.min())
    suite.claims.append({"claim": "thermal-input Wigner function has no negative domain",
                         "min_w_fig3a": w_min, "holds": w_min >= -1e-9})


def run_suite(level: str = "fast") -> dict:
    if level not in ("fast", "full"):
        raise ValueError(f"level must be fast or full, got {level!r}")
    start = time.perf_counter()
    suite = Suite()
    suite.guarded("oracle_group", "oracle", lambda: _oracle_checks(suite, level))
    suite.guarded("invariant_group", "invariants", lambda: _invariant_checks(suite, level))
    try:
        _audit(suite)
    except ZeroNormError as exc:
        suite.discrepancies.append({"name": "audit", "error": str(exc)})
    _claims(suite, level)
    return {
        "suite_version": __version__,
        "level": level,
        "passed": suite.passed,
        "checks": suite.checks,
        "discrepancies": suite.discrepancies,
        "figure_claims": suite.claims,
        "elapsed_s": time.perf_counter() - start,
    }
