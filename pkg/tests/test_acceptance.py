"""Acceptance criteria 1-10.  Each test prints one PASS/FAIL line with its runtime."""

import itertools
import time

import numpy as np
import pytest

from compiledgames import cli
from compiledgames.compiled import (
    FrequencyDistinguisher,
    HonestProver,
    KeyedPadScheme,
    LeakyScheme,
    PeekDistinguisher,
    SecurityConfig,
    best_classical_prover,
    exact_compiled_bias,
    ind_cpa_experiment,
    run_compiled,
)
from compiledgames.games import BellFunctional, chsh, elegant, mnx_functional, mnx_quantum_bound, random_violating_mnx
from compiledgames.pseudo import (
    Degree2Poly,
    build_moment_matrix,
    certificate_for,
    compiled_bound_report,
    pseudo_expect,
    satwap_bell_poly,
    sos_term_check,
    xor_bell_poly,
)
from compiledgames.games import bias_to_winprob, classical_bias
from compiledgames.quantum import (
    SX,
    SY,
    SZ,
    QuantumStrategy,
    StateVector,
    bias_of_strategy,
    chsh_optimal_strategy,
    elegant_optimal_strategy,
    mnx_optimal_strategy,
    random_binary_observable,
    random_generalized_observable,
)
from compiledgames.satwap import (
    SatwapGame,
    correlator_table,
    satwap_bounds,
    satwap_classical_enumeration,
    satwap_optimal_strategy,
    satwap_sos_residual,
    satwap_value,
    zd_td,
)
from compiledgames.sdp import solve_xor_sdp
from compiledgames.selftest import (
    anticommutator_residual,
    elegant_bound,
    elegant_selftest,
    jordan_extract,
    satwap_selftest_residuals,
    weighted_states,
)
from compiledgames.sos import bob_poly_psd_defect, build_sos, ostrev_vectors, verify_sos_identity


@pytest.fixture
def verdict(capsys):
    """Record named checks, then print one line and assert they all hold."""
    started = time.perf_counter()
    checks = []

    def check(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    def finish(number, title, budget_s):
        elapsed = time.perf_counter() - started
        failed = [f"{n} ({d})" if d else n for n, ok, d in checks if not ok]
        within = elapsed < budget_s
        status = "PASS" if not failed and within else "FAIL"
        note = "; ".join(failed) if failed else f"{len(checks)} checks"
        with capsys.disabled():
            print(
                f"\nACCEPTANCE {number:>2} {status}: {title} "
                f"[{note}; {elapsed:.1f}s of {budget_s:g}s]"
            )
        assert not failed, failed
        assert within, f"runtime {elapsed:.1f}s exceeds {budget_s}s"

    check.finish = finish
    return check


def test_criterion_01_chsh_golden(verdict):
    fn = chsh()
    sol = solve_xor_sdp(fn)
    verdict("brute = 0.5", classical_bias(fn) == 0.5)
    verdict("sdp", abs(sol.dual_value - np.sqrt(2) / 2) <= 1e-7, sol.dual_value)
    verdict("gap", abs(sol.gap) <= 1e-9, sol.gap)
    verdict("win prob", abs(bias_to_winprob(sol.dual_value) - np.cos(np.pi / 8) ** 2) <= 1e-12)
    verdict.finish(1, "CHSH golden values", 1)


def test_criterion_02_sos_sweep(verdict):
    rng = np.random.default_rng(2)
    worst = {"identity": 0.0, "bob": np.inf, "ostrev": 0.0, "schur": np.inf}
    for _ in range(20):
        nA, nB = rng.integers(1, 5, size=2)
        fn = BellFunctional("r", rng.uniform(-1, 1, (nA, nB)))
        sol = solve_xor_sdp(fn)
        cert = build_sos(fn, sol)
        d = ostrev_vectors(fn, sol).relation_defects(fn, sol.lam)
        worst["ostrev"] = max(worst["ostrev"], d["uu"], d["uv"])
        worst["schur"] = min(worst["schur"], cert.schur_defect(), d["vv_min_eig"])
        for _ in range(5):
            dim = int(rng.integers(1, 9))
            alice = [random_binary_observable(dim, rng) for _ in range(nA)]
            bob = [random_binary_observable(dim, rng) for _ in range(nB)]
            worst["identity"] = max(worst["identity"], verify_sos_identity(cert, (alice, bob)))
            worst["bob"] = min(worst["bob"], bob_poly_psd_defect(cert, bob))
    verdict("identity residual", worst["identity"] <= 1e-8, worst["identity"])
    verdict("bob_poly min eig", worst["bob"] >= -1e-8, worst["bob"])
    verdict("ostrev equalities", worst["ostrev"] <= 1e-10, worst["ostrev"])
    verdict("schur defect", worst["schur"] >= -1e-9, worst["schur"])
    verdict.finish(2, "SOS soundness sweep", 60)


def _rotated_elegant(theta):
    s = elegant_optimal_strategy()
    b3 = np.cos(theta) * SZ + np.sin(theta) * SX
    return HonestProver.from_strategy(QuantumStrategy(s.state, s.alice, [SX, SY, b3]))


def test_criterion_03_elegant(verdict):
    fn = elegant()
    target = 4 * np.sqrt(3)
    verdict("sdp", abs(solve_xor_sdp(fn).dual_value - target) <= 1e-7)
    verdict("strategy", abs(bias_of_strategy(fn, elegant_optimal_strategy()) - target) <= 1e-7)
    # independent classical oracle: all 2^7 deterministic strategies
    signs = itertools.product((-1, 1), repeat=7)
    classical = max(float(np.array(s[:4]) @ fn.phi @ np.array(s[4:])) for s in signs)
    verdict("classical = 6", classical == 6.0 and classical_bias(fn) == 6.0)
    r = elegant_selftest(_rotated_elegant(0.0))
    verdict("optimum residuals", max(r.residuals.values()) <= 1e-8, r.residuals)
    for theta in (0.05, 0.1, 0.2):
        r = elegant_selftest(_rotated_elegant(theta))
        bound = elegant_bound(r.eps, 0.0)
        worst = max(r.residuals.values())
        verdict(f"theta={theta}", worst < bound and r.eps > 0, f"{worst:.4g} vs {bound:.4g}")
    verdict.finish(3, "elegant inequality", 10)


def test_criterion_04_satwap(verdict):
    rng = np.random.default_rng(4)
    for d in range(2, 7):
        g = SatwapGame(d)
        s = satwap_optimal_strategy(d)
        value = satwap_value(correlator_table(s), g)
        verdict(f"d={d} value", abs(value - 2 * (d - 1)) <= 1e-6, value)
        res = [satwap_sos_residual(d, s)]
        for _ in range(3):
            alice = [random_generalized_observable(d, d, rng) for _ in range(2)]
            bob = [random_generalized_observable(d, d, rng) for _ in range(2)]
            res.append(satwap_sos_residual(d, QuantumStrategy(StateVector.max_entangled(d), alice, bob, d=d)))
        verdict(f"d={d} sos", max(res) <= 1e-8, max(res))
        for name, m in zip("ZT", zd_td(d)):
            defect = max(
                np.abs(m @ m.conj().T - np.eye(d)).max(),
                np.abs(np.linalg.matrix_power(m, d) - np.eye(d)).max(),
            )
            verdict(f"d={d} {name}_d", defect <= 1e-8, defect)
        st = satwap_selftest_residuals(HonestProver.from_strategy(s), d)
        verdict(f"d={d} self-test", max(st.residuals.values()) <= 1e-8)
        if d <= 4:
            diff = abs(satwap_bounds(d)[0] - satwap_classical_enumeration(d))
            verdict(f"d={d} cotangent", diff <= 1e-9, diff)
    verdict("d=2 gives sqrt 2", abs(satwap_bounds(2)[0] - np.sqrt(2)) <= 1e-9)
    verdict.finish(4, "SATWAP family d=2..6", 60)


def test_criterion_05_completeness(verdict):
    p = random_violating_mnx(np.random.default_rng(5))
    cases = [
        ("chsh", chsh(), chsh_optimal_strategy()),
        ("elegant", elegant(), elegant_optimal_strategy()),
        ("mnx", mnx_functional(p), mnx_optimal_strategy(p)),
    ]
    for name, fn, s in cases:
        diff = abs(exact_compiled_bias(fn, HonestProver.from_strategy(s)) - bias_of_strategy(fn, s))
        verdict(name, diff <= 1e-9, diff)
    s = satwap_optimal_strategy(3)
    nonlocal_value = satwap_value(correlator_table(s), SatwapGame(3))
    diff = abs(exact_compiled_bias(SatwapGame(3), HonestProver.from_strategy(s)) - nonlocal_value)
    verdict("satwap d=3", diff <= 1e-9, diff)
    verdict.finish(5, "compiled completeness", 10)


def test_criterion_06_classical_soundness(verdict):
    for fn in (chsh(), elegant()):
        score, _ = best_classical_prover(fn, 0.0)
        verdict(fn.name, score == classical_bias(fn), score)
    _, prover = best_classical_prover(chsh(), 1.0)
    run = run_compiled(chsh(), prover, SecurityConfig(leakage_p=1.0), 100_000, seed=6)
    win = run.win_rate()[0]
    verdict("leak p=1 win rate", win >= 0.99, win)
    verdict.finish(6, "compiled soundness (classical)", 30)


def test_criterion_07_pseudo_expectation(verdict):
    p = random_violating_mnx(np.random.default_rng(7))
    cases = [
        (chsh(), chsh_optimal_strategy()),
        (elegant(), elegant_optimal_strategy()),
        (mnx_functional(p), mnx_optimal_strategy(p)),
    ]
    for fn, s in cases:
        prover = HonestProver.from_strategy(s)
        m = build_moment_matrix(prover)
        one = pseudo_expect(Degree2Poly.one(), m)
        verdict(f"{fn.name} E[1]", abs(one - 1) <= 1e-12, one)
        diff = abs(pseudo_expect(xor_bell_poly(fn), m) - exact_compiled_bias(fn, prover))
        verdict(f"{fn.name} E[B]", diff <= 1e-10, diff)
        check = sos_term_check(certificate_for(fn), m, delta=0.0, tol=1e-9)
        verdict(f"{fn.name} E[P^dagger P]", check.passed, min(t.value for t in check.terms))
        rep = compiled_bound_report(fn, m, SecurityConfig(), tol=1e-9)
        verdict(f"{fn.name} bound", rep["pass"] and rep["excess"] <= 1e-9, rep["excess"])
    g = SatwapGame(3)
    m = build_moment_matrix(HonestProver.from_strategy(satwap_optimal_strategy(3)), g)
    verdict("satwap E[1]", abs(pseudo_expect(Degree2Poly.one(3), m) - 1) <= 1e-12)
    verdict("satwap E[P^dagger P]", sos_term_check(g, m, tol=1e-9).passed)
    rep = compiled_bound_report(g, m, SecurityConfig(), tol=1e-9)
    verdict("satwap bound", rep["pass"] and rep["excess"] <= 1e-9, rep["excess"])
    verdict("satwap E[B]", abs(pseudo_expect(satwap_bell_poly(g), m) - 4) <= 1e-10)
    verdict.finish(7, "pseudo-expectation suite", 10)


def test_criterion_08_mnx(verdict):
    rng = np.random.default_rng(8)
    for i in range(10):
        p = random_violating_mnx(rng)
        closed = abs(np.sin(p.mu) * np.sin(p.chi - p.nu) * np.sin(p.mu + p.nu + p.chi))
        sdp = solve_xor_sdp(mnx_functional(p)).dual_value
        verdict(f"#{i} sdp", abs(sdp - closed) <= 1e-6, sdp - closed)
        s = mnx_optimal_strategy(p)
        angles = jordan_extract(s.bob[0], s.bob[1])
        verdict(f"#{i} jordan", len(angles) == 1 and abs(angles[0] - p.mu) <= 1e-8, angles)
        prover = HonestProver.from_strategy(s)
        states = [(w, psi) for x in range(2) for w, _, psi in weighted_states(prover, x)]
        states = [(w / 2, psi) for w, psi in states]
        res = anticommutator_residual(*[prover.lift_bob(b) for b in s.bob], 2 * np.cos(p.mu), states)
        verdict(f"#{i} anticommutator", res <= 1e-8, res)
    verdict.finish(8, "mu-nu-chi family", 30)


def test_criterion_09_ind_cpa(verdict):
    r = ind_cpa_experiment(KeyedPadScheme(), FrequencyDistinguisher(), 100_000, seed=9)
    verdict("pad/frequency", abs(r.advantage) <= 3 * r.stderr, f"{r.advantage:.4f} +- {r.stderr:.4f}")
    r = ind_cpa_experiment(LeakyScheme(0.1), PeekDistinguisher(), 100_000, seed=9)
    verdict("leaky/peek", abs(r.advantage - 0.05) <= 3 * r.stderr, f"{r.advantage:.4f} +- {r.stderr:.4f}")
    verdict.finish(9, "IND-CPA harness", 30)


COMMANDS = [
    ["bound", "--game", "{g}/chsh.json"],
    ["bound", "--game", "{g}/elegant.json", "--seed", "3"],
    ["sos", "--game", "{g}/elegant.json", "--seed", "4"],
    ["sos", "--game", "{g}/single-entry.json"],
    ["compile", "--game", "{g}/chsh.json", "--scheme", "leaky:0.3", "--rounds", "2000", "--exact", "--seed", "5"],
    ["compile", "--game", "{g}/chsh.json", "--prover", "classical", "--scheme", "leaky:1", "--rounds", "1000"],
    ["compile", "--game", "{g}/satwap3.json", "--rounds", "1000", "--exact", "--seed", "2"],
    ["compile", "--game", "{g}/mnx.json", "--rounds", "1000", "--exact"],
    ["selftest", "--family", "elegant", "--eps-sweep"],
    ["selftest", "--family", "mnx", "--eps-sweep", "--seed", "12"],
    ["selftest", "--family", "satwap", "--d", "3", "--eps-sweep"],
    ["satwap", "--d", "4", "--seed", "1"],
]


def test_criterion_10_determinism(verdict, games_dir, capsys):
    import json

    for argv in COMMANDS:
        argv = [a.format(g=games_dir) for a in argv]
        payloads = []
        for _ in range(2):
            code, report = cli.run(argv)
            capsys.readouterr()
            payloads.append(json.dumps(cli.numeric_payload(report), sort_keys=True).encode())
        verdict(" ".join(argv[:1] + argv[2:3]), report is not None and payloads[0] == payloads[1])
    verdict.finish(10, "determinism of command reports", 60)
