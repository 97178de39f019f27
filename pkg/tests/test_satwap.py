import numpy as np
import pytest

from compiledgames.games import GuardExceeded
from compiledgames.quantum import (
    QuantumStrategy,
    StateVector,
    check_generalized,
    random_generalized_observable,
)
from compiledgames.satwap import (
    SatwapGame,
    c_operators,
    correlator_table,
    satwap_bounds,
    satwap_classical_enumeration,
    satwap_optimal_strategy,
    satwap_sos_residual,
    satwap_value,
    zd_td,
)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_optimal_value(d):
    s = satwap_optimal_strategy(d)
    assert satwap_value(correlator_table(s), SatwapGame(d)) == pytest.approx(2 * (d - 1), abs=1e-9)
    assert satwap_sos_residual(d, s) <= 1e-10


@pytest.mark.parametrize("d", [2, 3, 4])
def test_cotangent_formula_matches_enumeration(d):
    assert satwap_bounds(d)[0] == pytest.approx(satwap_classical_enumeration(d), abs=1e-9)


def test_d2_is_chsh():
    assert satwap_bounds(2)[0] == pytest.approx(np.sqrt(2), abs=1e-12)
    assert satwap_bounds(2)[1] == 2.0


@pytest.mark.parametrize("d", [2, 3, 5])
def test_random_strategies_below_bound(d, rng):
    g = SatwapGame(d)
    for _ in range(5):
        dim = d + int(rng.integers(0, 2))
        alice = [random_generalized_observable(dim, d, rng) for _ in range(2)]
        bob = [random_generalized_observable(dim, d, rng) for _ in range(2)]
        psi = rng.normal(size=dim * dim) + 1j * rng.normal(size=dim * dim)
        s = QuantumStrategy(StateVector(psi / np.linalg.norm(psi), (dim, dim)), alice, bob, d=d)
        assert satwap_value(correlator_table(s), g) <= 2 * (d - 1) + 1e-6
        assert satwap_sos_residual(d, s) <= 1e-8


@pytest.mark.parametrize("d", [2, 3, 6])
def test_zd_td(d):
    for m in zd_td(d):
        check_generalized(m, d)
        np.testing.assert_allclose(np.linalg.matrix_power(m, d), np.eye(d), atol=1e-10)


def test_t2_is_minus_sigma_x():
    _, T = zd_td(2)
    np.testing.assert_allclose(T, -np.array([[0, 1], [1, 0]]), atol=1e-12)


def test_conjugation_symmetry(rng):
    # <A^(d-k) B^(d-l)> = conj <A^k B^l>
    d = 4
    s = QuantumStrategy(
        StateVector.max_entangled(d),
        [random_generalized_observable(d, d, rng) for _ in range(2)],
        [random_generalized_observable(d, d, rng) for _ in range(2)],
        d=d,
    )
    t = correlator_table(s)
    for k in range(d):
        for l in range(d):
            np.testing.assert_allclose(t[:, :, (d - k) % d, (d - l) % d], np.conj(t[:, :, k, l]), atol=1e-12)


def test_c_operator_powers_at_optimum():
    d = 3
    g = SatwapGame(d)
    s = satwap_optimal_strategy(d)
    psi = s.state.amplitudes
    for x in range(2):
        c1 = c_operators(g, s.bob, 1)[x]
        c2 = c_operators(g, s.bob, 2)[x]
        diff = s.lift_bob(c1 @ c1 - c2) @ psi
        assert np.linalg.norm(diff) <= 1e-6


def test_guards():
    with pytest.raises(GuardExceeded):
        SatwapGame(17)
    with pytest.raises(GuardExceeded):
        satwap_classical_enumeration(5)
    with pytest.raises(ValueError):
        SatwapGame(1)
