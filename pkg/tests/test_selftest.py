import numpy as np
import pytest

from compiledgames.compiled import HonestProver
from compiledgames.games import MnxParams, elegant, random_violating_mnx
from compiledgames.pseudo import build_moment_matrix, certificate_for, sos_term_check
from compiledgames.quantum import SX, SY, SZ, QuantumStrategy, elegant_optimal_strategy, mnx_optimal_strategy, random_unitary
from compiledgames.satwap import satwap_optimal_strategy
from compiledgames.selftest import (
    SelfTestReport,
    anticommutator_residual,
    elegant_bound,
    elegant_selftest,
    jordan_extract,
    mnx_selftest,
    satwap_selftest_residuals,
)


def _unit_states(rng, dim, n=3):
    out = []
    for _ in range(n):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        out.append((1 / n, v / np.linalg.norm(v)))
    return out


def test_anticommutator_examples(rng):
    mu = 0.7
    b2 = np.cos(mu) * SX + np.sin(mu) * SZ
    states = _unit_states(rng, 2)
    assert anticommutator_residual(SX, b2, 2 * np.cos(mu), states) == pytest.approx(0, abs=1e-24)
    assert anticommutator_residual(SX, SX, 0.0, states) == pytest.approx(4)


def test_anticommutator_rejects_bad_weights(rng):
    states = [(0.3, s) for _, s in _unit_states(rng, 2)]
    with pytest.raises(ValueError):
        anticommutator_residual(SX, SZ, 0, states)


def test_residual_invariances(rng):
    b1, b2 = SX, np.cos(0.4) * SX + np.sin(0.4) * SZ
    states = _unit_states(rng, 2)
    base = anticommutator_residual(b1, b2, 1.0, states)
    phased = [(w, np.exp(1.3j) * s) for w, s in states]
    assert anticommutator_residual(b1, b2, 1.0, phased) == pytest.approx(base)
    u = random_unitary(2, rng)
    conj = lambda m: u @ m @ u.conj().T
    rotated = [(w, u @ s) for w, s in states]
    assert anticommutator_residual(conj(b1), conj(b2), 1.0, rotated) == pytest.approx(base)


def test_jordan_examples(rng):
    mu = 1.1
    assert jordan_extract(SX, np.cos(mu) * SX + np.sin(mu) * SZ) == pytest.approx([mu], abs=1e-12)
    assert jordan_extract(SZ, SZ) == pytest.approx([0.0], abs=1e-7)
    blocks = lambda a, b: np.kron(np.diag([1, 0]), a) + np.kron(np.diag([0, 1]), b)
    b1 = blocks(SX, SX)
    b2 = blocks(np.cos(np.pi / 4) * SX + np.sin(np.pi / 4) * SZ, np.cos(np.pi / 3) * SX + np.sin(np.pi / 3) * SZ)
    assert jordan_extract(b1, b2) == pytest.approx([np.pi / 4, np.pi / 3], abs=1e-9)
    u = random_unitary(4, rng)
    conj = lambda m: u @ m @ u.conj().T
    assert jordan_extract(conj(b1), conj(b2)) == pytest.approx([np.pi / 4, np.pi / 3], abs=1e-7)


def test_jordan_one_dimensional_blocks():
    # diag(1, -1) and diag(1, 1): anticommutator/2 = diag(1, -1), angles 0 and pi
    assert jordan_extract(np.diag([1.0, -1.0]), np.eye(2)) == pytest.approx([0.0, np.pi])


def test_report_semantics():
    r = SelfTestReport("x", {"a": 0.1, "b": 0.2}, {"a": 0.1, "b": 0.3})
    assert r.passed is True
    r = SelfTestReport("x", {"a": 0.2}, {"a": 0.1})
    assert r.passed is False
    assert SelfTestReport("x", {"a": 0.2}, {"a": None}).passed is None


def _rotated_elegant(theta):
    s = elegant_optimal_strategy()
    b3 = np.cos(theta) * SZ + np.sin(theta) * SX
    return HonestProver.from_strategy(QuantumStrategy(s.state, s.alice, [SX, SY, b3]))


def test_elegant_optimal():
    r = elegant_selftest(_rotated_elegant(0.0))
    assert r.passed and max(r.residuals.values()) <= 1e-8


def test_elegant_sweep_monotone_and_bounded():
    prev = -1.0
    for theta in (0.01, 0.05, 0.1, 0.2, 0.3):
        r = elegant_selftest(_rotated_elegant(theta))
        worst = max(r.residuals.values())
        assert worst > prev
        prev = worst
        assert worst == pytest.approx(4 * np.sin(theta) ** 2, rel=1e-9)
        assert worst < elegant_bound(r.eps, 0.0)
        assert worst < r.notes["rigorous_bound"]


def test_elegant_large_delta_passes_anything(rng):
    s = elegant_optimal_strategy()
    bob = [SX, SX, SX]
    prover = HonestProver.from_strategy(QuantumStrategy(s.state, s.alice, bob))
    r = elegant_selftest(prover, delta=1.0)
    assert r.passed
    assert max(r.residuals.values()) == pytest.approx(4)


def test_elegant_chaining_identity():
    # eps equals the weighted sum of the pseudo-expectation terms
    for theta in (0.0, 0.1, 0.3):
        prover = _rotated_elegant(theta)
        r = elegant_selftest(prover)
        check = sos_term_check(certificate_for(elegant()), build_moment_matrix(prover))
        assert r.eps == pytest.approx(check.weighted_sum, abs=1e-8)
        assert r.eps == pytest.approx(sum(t.value for t in check.terms[:4]) / (2 / np.sqrt(3)), abs=1e-8)


def test_mnx_optimal_and_perturbed(rng):
    for _ in range(3):
        p = random_violating_mnx(rng)
        s = mnx_optimal_strategy(p)
        r = mnx_selftest(HonestProver.from_strategy(s), p)
        assert r.passed and max(r.residuals.values()) <= 1e-8
        assert r.extracted["angles"] == pytest.approx([p.mu], abs=1e-8)
        for eta in (0.02, 0.1):
            ang = p.mu + eta
            b1 = np.cos(ang) * SX + np.sin(ang) * SZ
            pr = HonestProver.from_strategy(QuantumStrategy(s.state, s.alice, [SX, b1]))
            r = mnx_selftest(pr, p)
            assert r.eps > 0 and r.passed


def test_mnx_rejects_degenerate():
    with pytest.raises(ValueError):
        mnx_selftest(None, MnxParams(1.0, 0.4, 0.4))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_satwap_residuals_at_optimum(d):
    r = satwap_selftest_residuals(HonestProver.from_strategy(satwap_optimal_strategy(d)), d)
    assert max(r.residuals.values()) <= 1e-8
    assert r.passed is None


def test_satwap_guard():
    prover = HonestProver.from_strategy(satwap_optimal_strategy(3))
    with pytest.raises(ValueError):
        satwap_selftest_residuals(prover, 4)
