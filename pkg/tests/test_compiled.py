import json

import numpy as np
import pytest

from compiledgames.compiled import (
    BodyDistinguisher,
    ClassicalProver,
    FrequencyDistinguisher,
    HonestProver,
    KeyedPadScheme,
    LeakyScheme,
    PeekDistinguisher,
    SecurityConfig,
    TransparentScheme,
    best_classical_prover,
    classical_as_kraus,
    crypto_correlators,
    exact_classical_score,
    exact_compiled_bias,
    ind_cpa_experiment,
    make_scheme,
    post_measurement_states,
    run_compiled,
)
from compiledgames.games import BellFunctional, chsh, elegant, mnx_functional, random_violating_mnx
from compiledgames.quantum import (
    bias_of_strategy,
    chsh_optimal_strategy,
    correlation_matrix,
    elegant_optimal_strategy,
    mnx_optimal_strategy,
)
from compiledgames.satwap import SatwapGame, satwap_optimal_strategy

from conftest import brute_bias


def test_schemes_roundtrip(rng):
    for scheme in (TransparentScheme(), KeyedPadScheme(), LeakyScheme(0.3)):
        key = scheme.gen(128, rng)
        for m in (0, 1, 7, 255):
            assert scheme.dec(key, scheme.enc(key, m, rng)) == m


def test_scheme_errors(rng):
    with pytest.raises(ValueError):
        KeyedPadScheme().gen(12, rng)
    with pytest.raises(ValueError):
        KeyedPadScheme().enc(b"k" * 16, 256, rng)
    with pytest.raises(ValueError):
        make_scheme("leaky:abc")
    with pytest.raises(ValueError):
        make_scheme("rot13")
    with pytest.raises(ValueError):
        SecurityConfig(leakage_p=1.5)
    assert make_scheme("leaky:0.25").p == 0.25


def test_pad_is_randomized(rng):
    s = KeyedPadScheme()
    key = s.gen(128, rng)
    bodies = {s.enc(key, 1, rng).body for _ in range(50)}
    assert len(bodies) > 20


def test_completeness_matches_nonlocal(rng):
    p = random_violating_mnx(rng)
    cases = [
        (chsh(), chsh_optimal_strategy()),
        (elegant(), elegant_optimal_strategy()),
        (mnx_functional(p), mnx_optimal_strategy(p)),
    ]
    for fn, s in cases:
        prover = HonestProver.from_strategy(s)
        assert exact_compiled_bias(fn, prover) == pytest.approx(bias_of_strategy(fn, s), abs=1e-9)
        np.testing.assert_allclose(crypto_correlators(prover)[:, :, 1, 1].real, correlation_matrix(s), atol=1e-12)
    prover = HonestProver.from_strategy(satwap_optimal_strategy(3))
    assert exact_compiled_bias(SatwapGame(3), prover) == pytest.approx(4.0, abs=1e-9)


def test_post_measurement_probabilities_sum_to_one():
    for s in (elegant_optimal_strategy(), satwap_optimal_strategy(4)):
        prover = HonestProver.from_strategy(s)
        for x in range(prover.nA):
            total = sum(np.vdot(v, v).real for _, v in post_measurement_states(prover, x))
            assert total == pytest.approx(1, abs=1e-12)


def test_incomplete_kraus_rejected():
    s = chsh_optimal_strategy()
    good = HonestProver.from_strategy(s)
    bad = [[(1.0, [0.5 * m for m in good.kraus[0][0][1]])], good.kraus[1]]
    with pytest.raises(ValueError):
        HonestProver(s.state, bad, good.bob)


def test_classical_soundness_zero_leak():
    for fn in (chsh(), elegant(), BellFunctional("r", np.random.default_rng(5).uniform(-1, 1, (3, 4)))):
        score, _ = best_classical_prover(fn)
        assert score == pytest.approx(brute_bias(fn.phi), abs=1e-12)


def test_leak_interpolates():
    fn = chsh()
    for p in (0.0, 0.25, 0.5, 1.0):
        score, prover = best_classical_prover(fn, p)
        assert score == pytest.approx((1 - p) * 0.5 + p * 1.0)
        assert exact_compiled_bias(fn, classical_as_kraus(fn, prover, p)) == pytest.approx(score)


def test_non_exploiting_prover_ignores_leak():
    prover = ClassicalProver([0, 0], [0, 0], exploit_leaks=False)
    assert exact_classical_score(chsh(), prover, 1.0) == 0.5


def test_honest_run_estimate():
    fn = chsh()
    prover = HonestProver.from_strategy(chsh_optimal_strategy())
    run = run_compiled(fn, prover, SecurityConfig(), 20000, seed=3)
    mean, err = run.estimate()
    assert abs(mean - np.sqrt(2) / 2) <= 4 * err
    win, werr = run.win_rate()
    assert abs(win - np.cos(np.pi / 8) ** 2) <= 4 * werr


def test_classical_leaky_run_wins():
    fn = chsh()
    _, prover = best_classical_prover(fn, 1.0)
    run = run_compiled(fn, prover, SecurityConfig(leakage_p=1.0), 2000, seed=0)
    assert run.win_rate()[0] == 1.0


def test_run_is_deterministic_and_order_free():
    fn = elegant()
    prover = HonestProver.from_strategy(elegant_optimal_strategy())
    cfg = SecurityConfig(leakage_p=0.2)
    a = run_compiled(fn, prover, cfg, 300, seed=11)
    b = run_compiled(fn, prover, cfg, 300, seed=11)
    assert a.to_jsonl() == b.to_jsonl()
    # rounds depend only on (seed, index): a longer run extends the shorter one
    c = run_compiled(fn, prover, cfg, 400, seed=11)
    assert c.transcripts[:300] == a.transcripts
    rec = json.loads(a.to_jsonl().splitlines()[0])
    assert set(rec) == {"x", "ct_nonce", "a", "y", "b", "win"}


def test_satwap_run():
    g = SatwapGame(3)
    run = run_compiled(g, HonestProver.from_strategy(satwap_optimal_strategy(3)), SecurityConfig(), 5000, 1)
    mean, err = run.estimate()
    assert abs(mean - 4.0) <= 4 * err
    assert run.win_rate() is None


def test_shape_mismatch():
    with pytest.raises(ValueError):
        exact_compiled_bias(elegant(), HonestProver.from_strategy(chsh_optimal_strategy()))


def test_ind_cpa_pad_and_leak():
    r = ind_cpa_experiment(KeyedPadScheme(), FrequencyDistinguisher(), 4000, seed=1)
    assert abs(r.advantage) <= 4 * r.stderr
    r = ind_cpa_experiment(TransparentScheme(), BodyDistinguisher(), 1000, seed=1)
    assert r.advantage == 0.5
    r = ind_cpa_experiment(LeakyScheme(1.0), PeekDistinguisher(), 1000, seed=1)
    assert r.advantage == 0.5
    with pytest.raises(ValueError):
        ind_cpa_experiment(KeyedPadScheme(), PeekDistinguisher(), 10, seed=1)
