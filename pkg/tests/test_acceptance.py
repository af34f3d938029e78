"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` (or ``-rA``) to see the
per-criterion lines.  Every tolerance is pinned here; nothing is deferred to
later calibration.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nfa2crn.analysis import (
    AmParams,
    am_drift,
    am_drift_coefficients,
    am_equilibria,
    am_travel_time,
    copy_lower_bound,
    copy_solution,
    copy_upper_bound,
    phase_bounds,
    plan_parameters,
)
from nfa2crn.brn import ConcState
from nfa2crn.nfa import Nfa, parse_nfa
from nfa2crn.perturb import (
    ObservationScheme,
    PerturbationProfile,
    perturb_initial,
    perturb_rates,
)
from nfa2crn.pipeline import EXAMPLE_NFA_TEXT, RunManifest, all_words, random_nfa, run_end_to_end
from nfa2crn.signals import MappingSignal, SignalSpec, encode, validate
from nfa2crn.simulate import SimConfig, check_phi, integrate
from nfa2crn.translate import translate, verify_catalyst_property

from conftest import PLAN_DELTA, PLAN_EPS, PLAN_ETA

RNG_SEED = 20240811


def _report(criterion, ok, detail):
    line = f"[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} — {detail}"
    print(line, flush=True)
    assert ok, line


# ---------------------------------------------------------------- corpora

_PLAN_CACHE = {}


def _plan_for(d):
    if d not in _PLAN_CACHE:
        result = plan_parameters(d, PLAN_EPS, PLAN_ETA, PLAN_DELTA)
        assert result.feasible, f"planning failed for d={d}: {result.message}"
        _PLAN_CACHE[d] = result.params
    return _PLAN_CACHE[d]


def _corpus_nfas(count, seed):
    rng = np.random.default_rng(seed)
    nfas = [parse_nfa(EXAMPLE_NFA_TEXT)]
    nfas += [random_nfa(rng, max_states=4, max_symbols=2) for _ in range(count)]
    return nfas


def _run_corpus(nfas, max_word_len, perturbed, seed):
    reports = []
    for i, nfa in enumerate(nfas):
        params = _plan_for(nfa.num_transitions)
        if perturbed:
            profile = PerturbationProfile(delta=params.delta, mode="sinusoid",
                                          omega=2 * math.pi / params.tau, seed=seed + i)
            scheme = ObservationScheme(eta=params.eta, mode="worst-case")
            initial_mode = "worst-case-signed"
        else:
            profile = PerturbationProfile()
            scheme = ObservationScheme()
            initial_mode = "exact"
        for word in all_words(nfa.alphabet, max_word_len):
            manifest = RunManifest(nfa=nfa, word=word, params=params, profile=profile,
                                   scheme=scheme, initial_mode=initial_mode, seed=seed + i)
            reports.append(run_end_to_end(manifest).report)
    return reports


@pytest.fixture(scope="module")
def corpus_unperturbed():
    start = time.monotonic()
    reports = _run_corpus(_corpus_nfas(30, RNG_SEED), max_word_len=4,
                          perturbed=False, seed=RNG_SEED)
    return reports, time.monotonic() - start


@pytest.fixture(scope="module")
def corpus_perturbed():
    reports = _run_corpus(_corpus_nfas(10, RNG_SEED + 1), max_word_len=4,
                          perturbed=True, seed=RNG_SEED + 1)
    return reports


# ---------------------------------------------------------------- criteria

def test_criterion_1_size_formulas(example_nfa):
    start = time.monotonic()
    rng = np.random.default_rng(RNG_SEED)
    rates = {"k1": 1.0, "k2": 1.0, "k3": 1.0, "k4": 1.0}
    for _ in range(200):
        q = int(rng.integers(1, 9))
        s = int(rng.integers(1, 5))
        states = tuple(f"q{i}" for i in range(q))
        alphabet = tuple(f"a{i}" for i in range(s))
        transitions = frozenset(
            (src, sym, dst)
            for src in states for sym in alphabet for dst in states
            if rng.random() < 0.3
        )
        nfa = Nfa(states, alphabet, transitions, frozenset({states[0]}), frozenset())
        out = translate(nfa, rates)
        assert len(out.brn.species) == 4 * q + s + 2
        assert len(out.brn.reactions) == 5 * q + len(transitions)
        assert verify_catalyst_property(out)

    out = translate(example_nfa, rates)
    assert out.size_report["species"] == 16
    assert out.size_report["reactions"] == 20
    by_family = {}
    for rxn, label in zip(out.brn.reactions, out.rate_labels):
        by_family.setdefault(label, set()).add(
            (tuple(sorted(rxn.reactants.items())), tuple(sorted(rxn.products.items()))))
    assert len(by_family["k3"]) == 3 and len(by_family["k1"]) == 5
    assert len(by_family["k2"]) == 6 and len(by_family["k4"]) == 6
    assert ((("X_1", 1), ("Y_A", 1), ("Zb_B", 1)),
            (("X_1", 1), ("Y_A", 1), ("Z_B", 1))) in by_family["k1"]
    elapsed = time.monotonic() - start
    _report(1, elapsed < 1.0,
            f"200 random + example network sizes exact in {elapsed:.3f} s (< 1 s)")


def test_criterion_2_oracle_equivalence_unperturbed(corpus_unperturbed):
    reports, elapsed = corpus_unperturbed
    bad = [r for r in reports
           if not r["verdicts_match"] or r["decision"]["accept"] == "undetermined"
           or r["decision"]["accept"] != r["oracle"]["accepts"]]
    ok = not bad and elapsed < 600.0
    _report(2, ok,
            f"{len(reports)} unperturbed runs, {len(bad)} mismatches, {elapsed:.1f} s (< 600 s)")


def test_criterion_3_robust_equivalence(corpus_perturbed):
    reports = corpus_perturbed
    bad = [r for r in reports
           if not r["verdicts_match"] or r["decision"]["accept"] == "undetermined"
           or r["decision"]["accept"] != r["oracle"]["accepts"]]
    _report(3, not bad, f"{len(reports)} adversarial runs, {len(bad)} mismatches")


def test_criterion_4_conservation(corpus_unperturbed, corpus_perturbed):
    reports = corpus_unperturbed[0] + corpus_perturbed
    worst = max(r["conservation"]["max_deviation"] for r in reports)
    bands = all(r["conservation"]["band_ok"] for r in reports)
    ok = worst <= 1e-6 and bands
    _report(4, ok, f"max paired-sum deviation {worst:.3e} (<= 1e-6), totals in band: {bands}")


def test_criterion_5_equilibria():
    rng = np.random.default_rng(RNG_SEED + 2)
    worst = 0.0
    for _ in range(1000):
        for variant in ("decay", "growth"):
            a, b, p = rng.uniform(0.1, 10.0, 3)
            lead = p * a if variant == "decay" else p * b
            c = rng.uniform(0.01, 0.95) * lead * lead / (4 * (a + b))
            params = AmParams(a, b, c, p)
            eq = am_equilibria(params, variant)
            roots = np.sort(np.roots(am_drift_coefficients(params, variant)).real)
            worst = max(worst, float(np.max(np.abs(roots - np.sort(eq.as_tuple())))))
            assert eq.drift_derivative(eq.e1) < 0
            assert eq.drift_derivative(eq.e2) > 0
            assert eq.drift_derivative(eq.e3) < 0
    _report(5, worst <= 1e-10, f"1000 cases/variant, max |formula - root-finder| = {worst:.2e} (<= 1e-10)")


def test_criterion_6_travel_times():
    rng = np.random.default_rng(RNG_SEED + 3)
    worst = 0.0
    for variant in ("decay", "growth"):
        for _ in range(500):
            a, b, p = rng.uniform(0.2, 5.0, 3)
            lead = p * a if variant == "decay" else p * b
            c = rng.uniform(0.05, 0.8) * lead * lead / (4 * (a + b))
            params = AmParams(a, b, c, p)
            eq = am_equilibria(params, variant)
            if variant == "decay":
                u1 = eq.e2 + (eq.e3 - eq.e2) * rng.uniform(0.1, 0.5)
                u2 = u1 + (eq.e3 - u1) * rng.uniform(0.1, 0.8)
                direction = 1.0
            else:
                u1 = eq.e1 + (eq.e2 - eq.e1) * rng.uniform(0.5, 0.9)
                u2 = eq.e1 + (u1 - eq.e1) * rng.uniform(0.2, 0.9)
                direction = -1.0
            t_closed = am_travel_time(eq, u1, u2)

            def hit(t, u, u2=u2):
                return u[0] - u2

            hit.terminal = True
            hit.direction = direction
            sol = solve_ivp(lambda t, u: am_drift(params, variant, u), (0, 1e6), [u1],
                            events=hit, rtol=1e-11, atol=1e-13)
            t_ode = float(sol.t_events[0][0])
            worst = max(worst, abs(t_closed - t_ode) / t_ode)
    _report(6, worst <= 1e-5, f"500 cases/variant, max relative error vs ODE = {worst:.2e} (<= 1e-5)")


def test_criterion_7_copy_dynamics():
    rng = np.random.default_rng(RNG_SEED + 4)
    worst = 0.0
    bound_violations = 0
    for _ in range(500):
        a, b = rng.uniform(0.05, 5.0, 2)
        p = rng.uniform(0.2, 1.0 + b / a) * 0.95
        u0 = rng.uniform(0.0, p)
        t = rng.uniform(0.01, 5.0)
        sol = solve_ivp(lambda tt, u: [a * (p - u[0]) - b * u[0]], (0, t), [u0],
                        rtol=1e-12, atol=1e-14)
        worst = max(worst, abs(copy_solution(u0, a, b, p, t) - float(sol.y[0, -1])))
        for frac in np.linspace(0.02, 1.0, 50):
            tt = t * frac
            u = copy_solution(u0, a, b, p, tt)
            if u > copy_upper_bound(a, b, p, tt) + 1e-12:
                bound_violations += 1
            if u < copy_lower_bound(a, b, p, tt) - 1e-12:
                bound_violations += 1
    ok = worst <= 1e-10 and bound_violations == 0
    _report(7, ok, f"500 cases, max |closed form - integrator| = {worst:.2e} (<= 1e-10), "
                   f"{bound_violations} bound violations")


def _unit_trapezoid(local):
    return np.clip(np.minimum(3.0 * local, 3.0 * (1.0 - local)), 0.0, 1.0)


def _single_phase_signal(present, leaks, tau):
    funcs = {}
    for name, level in leaks.items():
        funcs[name] = lambda t, level=level: np.full_like(np.asarray(t, dtype=float), level)
    funcs[present] = lambda t, tau=tau: np.where(
        (np.asarray(t) >= 0) & (np.asarray(t) <= tau),
        _unit_trapezoid(np.asarray(t, dtype=float) / tau), 0.0)
    return MappingSignal(funcs)


def _random_band_state(out, rng, eps):
    """Random concentrations with every paired total inside [1-eps, 1+2eps]."""
    x = out.initial.values.copy()
    names = out.brn.species_names
    idx = {nm: i for i, nm in enumerate(names)}
    for q in out.nfa.states:
        for base, dual in ((out.state_species(q), out.dual_state_species(q)),
                           (out.portal_species(q), out.dual_portal_species(q))):
            total = rng.uniform(1 - eps, 1 + 2 * eps)
            level = rng.uniform(0, total)
            x[idx[base]] = level
            x[idx[dual]] = total - level
    return ConcState(names, x)


def test_criterion_8_phase_bounds(example_nfa, planned):
    params = planned
    out = translate(example_nfa, params.rates)
    tau, eps = params.tau, params.epsilon
    rng = np.random.default_rng(RNG_SEED + 5)
    idx = {nm: i for i, nm in enumerate(out.brn.species_names)}
    input_names = [s.name for s in out.brn.input_species()]
    failures = []

    def run_phase(present, x0, seed):
        leaks = {nm: rng.uniform(0.0, 0.9 * eps) for nm in input_names if nm != present}
        signal = _single_phase_signal(present, leaks, tau)
        brn = perturb_rates(out.brn, PerturbationProfile(
            delta=params.delta, mode="sinusoid", omega=2 * math.pi / tau, seed=seed))
        return integrate(brn, x0, signal, SimConfig(t_end=tau, rel_tol=1e-9, abs_tol=1e-12))

    for trial in range(50):
        # reset: every portal drains below the bound, any starting level
        x0 = _random_band_state(out, rng, eps)
        trace = run_phase("X_r", x0, trial)
        record = phase_bounds(params, "reset")
        for q in example_nfa.states:
            z_end = trace.value(out.portal_species(q), tau)
            if not record.holds_for(z_end):
                failures.append(("reset", trial, q, z_end, record.value))

        # compute-high: high source A on symbol 1 fills portal B
        x0 = _random_band_state(out, rng, eps)
        c_y = x0[out.state_species("A")] + x0[out.dual_state_species("A")]
        y_a = rng.uniform(1 - params.gamma_star, c_y)
        x0 = x0.replace(**{out.state_species("A"): y_a,
                           out.dual_state_species("A"): c_y - y_a})
        trace = run_phase(out.symbol_species("1"), x0, 1000 + trial)
        record = phase_bounds(params, "compute-high")
        z_end = trace.value(out.portal_species("B"), tau)
        if not record.holds_for(z_end):
            failures.append(("compute-high", trial, "B", z_end, record.value))

        # compute-low: low source B on symbol 0 barely moves portal C
        record = phase_bounds(params, "compute-low")
        z0 = record.constants["z0"]
        x0 = _random_band_state(out, rng, eps)
        c_y = x0[out.state_species("B")] + x0[out.dual_state_species("B")]
        y_b = rng.uniform(0, params.gamma_star)
        c_z = x0[out.portal_species("C")] + x0[out.dual_portal_species("C")]
        z_c = rng.uniform(0, min(z0, c_z))
        x0 = x0.replace(**{out.state_species("B"): y_b,
                           out.dual_state_species("B"): c_y - y_b,
                           out.portal_species("C"): z_c,
                           out.dual_portal_species("C"): c_z - z_c})
        trace = run_phase(out.symbol_species("0"), x0, 2000 + trial)
        z_end = trace.value(out.portal_species("C"), tau)
        if not record.holds_for(z_end):
            failures.append(("compute-low", trial, "C", z_end, record.value))

        # copy-high: filled portal lifts the state species by 2tau/3
        record = phase_bounds(params, "copy-high")
        x0 = _random_band_state(out, rng, eps)
        c_z = x0[out.portal_species("A")] + x0[out.dual_portal_species("A")]
        z_a = rng.uniform(record.constants["z0"], c_z)
        x0 = x0.replace(**{out.portal_species("A"): z_a,
                           out.dual_portal_species("A"): c_z - z_a})
        trace = run_phase("X_c", x0, 3000 + trial)
        y_end = trace.value(out.state_species("A"), 2 * tau / 3)
        if not record.holds_for(y_end):
            failures.append(("copy-high", trial, "A", y_end, record.value))

        # copy-low: emptied portal pins the state species down by 2tau/3
        record = phase_bounds(params, "copy-low")
        x0 = _random_band_state(out, rng, eps)
        c_z = x0[out.portal_species("A")] + x0[out.dual_portal_species("A")]
        z_a = rng.uniform(0, min(record.constants["z0"], c_z))
        x0 = x0.replace(**{out.portal_species("A"): z_a,
                           out.dual_portal_species("A"): c_z - z_a})
        trace = run_phase("X_c", x0, 4000 + trial)
        y_end = trace.value(out.state_species("A"), 2 * tau / 3)
        if not record.holds_for(y_end):
            failures.append(("copy-low", trial, "A", y_end, record.value))

        # majority restoration during a non-copy phase, both directions
        record = phase_bounds(params, "am-high")
        x0 = _random_band_state(out, rng, eps)
        c_y = x0[out.state_species("C")] + x0[out.dual_state_species("C")]
        y_c = rng.uniform(1 - params.gamma, c_y)
        x0 = x0.replace(**{out.state_species("C"): y_c,
                           out.dual_state_species("C"): c_y - y_c})
        trace = run_phase("X_r", x0, 5000 + trial)
        y_end = trace.value(out.state_species("C"), tau)
        if not record.holds_for(y_end):
            failures.append(("am-high", trial, "C", y_end, record.value))

        record = phase_bounds(params, "am-low")
        x0 = _random_band_state(out, rng, eps)
        c_y = x0[out.state_species("C")] + x0[out.dual_state_species("C")]
        y_c = rng.uniform(0, params.gamma)
        x0 = x0.replace(**{out.state_species("C"): y_c,
                           out.dual_state_species("C"): c_y - y_c})
        trace = run_phase("X_r", x0, 6000 + trial)
        y_end = trace.value(out.state_species("C"), tau)
        if not record.holds_for(y_end):
            failures.append(("am-low", trial, "C", y_end, record.value))

    _report(8, not failures,
            f"50 trials x 7 phase bounds respected; failures: {failures[:5]}")


def test_criterion_9_base_case_and_induction(example_nfa, corpus_perturbed):
    rates = {"k1": 2.0, "k2": 3.0, "k3": 5.0, "k4": 7.0}
    out = translate(example_nfa, rates)
    signal = encode(SignalSpec((), epsilon=0.1, tau=1.0))
    rng = np.random.default_rng(RNG_SEED + 6)
    base_failures = 0
    for trial in range(100):
        eps = float(rng.uniform(0.01, 0.45))
        gamma = float(rng.uniform(eps, 0.499))
        mode = "worst-case-signed" if trial % 2 else "random"
        x0 = perturb_initial(out.initial, eps, mode=mode, seed=trial)
        trace = integrate(out.brn, x0, signal, SimConfig(t_end=1e-3))
        if not check_phi(trace, example_nfa, (), gamma, tau=1.0):
            base_failures += 1
    induction_ok = all(r["phi_all"] for r in corpus_perturbed)
    ok = base_failures == 0 and induction_ok
    _report(9, ok, f"base case: {base_failures}/100 failures; "
                   f"block-boundary levels hold on all adversarial runs: {induction_ok}")


def test_criterion_10_signal_admissibility():
    words = [(), ("1",), ("0", "1"), ("1", "1", "0"), ("0", "1", "0", "1"),
             ("1", "1", "0", "1", "0"), ("0", "1", "0", "1", "1", "0")]
    checked = 0
    for eps in (0.01, 0.1, 0.4):
        for tau in (1.0, 5.0):
            for word in words:
                spec = SignalSpec(word, epsilon=eps, tau=tau)
                report = validate(encode(spec), spec)
                assert report.admissible, str(report)
                checked += 1

    spec = SignalSpec(("1",), epsilon=0.1, tau=1.0)
    base = encode(spec)

    def scaled(factor):
        return MappingSignal(
            {n: (lambda t, n=n: factor * base.concentration(n, t)) for n in base.input_species()},
            critical=base.critical_times())

    too_high = validate(scaled(1 + 2 * spec.epsilon), spec)
    sagging = validate(scaled(0.85), spec)
    funcs = {n: (lambda t, n=n: base.concentration(n, t)) for n in base.input_species()}
    funcs["X_1"] = lambda t: base.concentration("X_1", t) + base.concentration("X_r", t)
    crowded = validate(MappingSignal(funcs, critical=base.critical_times()), spec)
    detected = (1 in too_high.conditions_violated()
                and 3 in crowded.conditions_violated()
                and 4 in sagging.conditions_violated())
    _report(10, checked == 42 and detected,
            f"{checked} encoded signals admissible; constructed violations of "
            f"conditions 1/3/4 detected: {detected}")
