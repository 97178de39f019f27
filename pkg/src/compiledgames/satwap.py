"""The two-input, d-outcome SATWAP Bell inequality.

Questions ``x, y`` are 0 and 1 (often written 1 and 2),
answers lie in ``0..d-1``.  Players are described by generalized observables
``U = sum_a omega**a M_a`` and correlators ``<A_x^k B_y^l>``.  The Bell
operator is::

    B = sum_{k=1}^{d-1} A_0^k (x) C_0^(k) + A_1^k (x) C_1^(k),
    C_0^(k) = a_k B_0^-k + conj(a_k) omega^k B_1^-k,
    C_1^(k) = conj(a_k) B_0^-k + a_k B_1^-k,

with ``a_k = omega**((2k - d) / 8) / sqrt(2)``.  Its quantum maximum is
``2(d - 1)``, certified by ``2(d-1) 1 - B = 1/2 sum_{x,k} P_xk^dagger P_xk``
where ``P_xk = (A_x^k)^dagger - C_x^(k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import GuardExceeded, classical_score_d
from .quantum import (
    QuantumStrategy,
    StateVector,
    check_generalized,
    dagger,
    polar_unitary,
    unitary_power,
)

MAX_D = 16
MAX_ENUMERATION_D = 4
POLAR_TOL = 1e-6


def _check_d(d: int, cap: int = MAX_D) -> int:
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d!r}")
    if d > cap:
        raise GuardExceeded(f"d = {d} exceeds the cap {cap}")
    return int(d)


@dataclass(frozen=True, eq=False)
class SatwapGame:
    d: int

    def __post_init__(self):
        object.__setattr__(self, "d", _check_d(self.d))

    @property
    def omega(self) -> complex:
        return np.exp(2j * np.pi / self.d)

    def a(self, k: int) -> complex:
        return np.exp(2j * np.pi * (2 * k - self.d) / (8 * self.d)) / np.sqrt(2)

    @property
    def phases(self) -> np.ndarray:
        """``a_1 .. a_{d-1}``."""
        return np.array([self.a(k) for k in range(1, self.d)])

    def coefficient(self, x: int, y: int, k: int) -> complex:
        """Weight of ``<A_x^k B_y^(d-k)>`` in the Bell expression."""
        ak = self.a(k)
        if (x, y) == (0, 0):
            return ak
        if (x, y) == (0, 1):
            return np.conj(ak) * self.omega**k
        if (x, y) == (1, 0):
            return np.conj(ak)
        if (x, y) == (1, 1):
            return ak
        raise IndexError(f"question pair ({x}, {y}) out of range")

    def value_tensor(self) -> np.ndarray:
        """``value[x, y, a, b]``: score of deterministic answers ``a, b`` to ``x, y``."""
        d = self.d
        diff = np.subtract.outer(np.arange(d), np.arange(d))
        out = np.zeros((2, 2, d, d), dtype=complex)
        for x in range(2):
            for y in range(2):
                for k in range(1, d):
                    out[x, y] += self.coefficient(x, y, k) * self.omega ** (k * diff)
        return out


def satwap_bounds(d: int) -> tuple[float, float]:
    """``(classical, quantum)`` bounds of the d-outcome inequality."""
    d = _check_d(d, cap=10**6)
    cot = lambda t: 1 / np.tan(t)
    classical = 0.5 * (3 * cot(np.pi / (4 * d)) - cot(3 * np.pi / (4 * d))) - 2
    return float(classical), float(2 * (d - 1))


def satwap_classical_enumeration(d: int) -> float:
    """Classical bound by brute force over deterministic strategies (``d <= 4``)."""
    d = _check_d(d, cap=MAX_ENUMERATION_D)
    return classical_score_d(SatwapGame(d).value_tensor())


def zd_td(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Bob's optimal observables ``Z_d`` and ``T_d``."""
    d = _check_d(d)
    omega = np.exp(2j * np.pi / d)
    i = np.arange(d)
    Z = np.diag(omega**i)
    signs = np.where(i == 0, -1.0, 1.0)
    T = np.diag(np.exp(2j * np.pi * (i + 0.5) / d)) - (2 / d) * np.outer(signs, signs) * np.exp(
        1j * np.pi * (i[:, None] + i[None, :] + 1) / d
    )
    check_generalized(Z, d)
    check_generalized(T, d)
    return Z, T


def c_operators(g: SatwapGame, bob, k: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= k < g.d:
        raise ValueError(f"k must lie in 0..{g.d - 1}")
    b0, b1 = (unitary_power(b, -k) for b in bob)
    ak = g.a(k)
    c0 = ak * b0 + np.conj(ak) * g.omega**k * b1
    c1 = np.conj(ak) * b0 + ak * b1
    return c0, c1


def satwap_optimal_strategy(d: int) -> QuantumStrategy:
    """Maximally entangled qudits with ``B = (Z_d, T_d)``.

    Alice answers with ``A_x = conj(C_x^(1))``: on ``|phi+>`` this makes
    ``A_x^k (x) C_x^(k)`` act as the identity, so every term of the Bell
    expression is saturated.  The complex conjugate is taken entrywise, and
    the polar correction may move it by at most ``POLAR_TOL``.
    """
    g = SatwapGame(d)
    Z, T = zd_td(d)
    alice = []
    for c in c_operators(g, (Z, T), 1):
        u = polar_unitary(np.conj(c))
        moved = np.abs(u - np.conj(c)).max()
        if moved > POLAR_TOL:
            raise ArithmeticError(f"Alice's combination is {moved:.2e} from unitary")
        alice.append(u)
    return QuantumStrategy(StateVector.max_entangled(d), alice, [Z, T], d=d)


def correlator_table(s: QuantumStrategy) -> np.ndarray:
    """``table[x, y, k, l] = <psi| A_x^k (x) B_y^l |psi>`` for ``k, l`` in ``0..d-1``."""
    d = s.d
    psi = s.state.amplitudes
    na, nb = len(s.alice), len(s.bob)
    apow = [[np.linalg.matrix_power(a, k) for k in range(d)] for a in s.alice]
    bpsi = [
        [s.lift_bob(np.linalg.matrix_power(b, l)) @ psi for l in range(d)] for b in s.bob
    ]
    table = np.zeros((na, nb, d, d), dtype=complex)
    for x in range(na):
        for k in range(d):
            left = s.lift_alice(dagger(apow[x][k])) @ psi
            for y in range(nb):
                for l in range(d):
                    table[x, y, k, l] = np.vdot(left, bpsi[y][l])
    return table


def satwap_value(table: np.ndarray, g: SatwapGame, imag_tol: float = 1e-8) -> float:
    table = np.asarray(table)
    d = g.d
    if table.shape[:2] != (2, 2) or table.shape[2] < d or table.shape[3] < d:
        raise ValueError(f"correlator table of shape {table.shape} is incomplete for d = {d}")
    total = 0j
    for k in range(1, d):
        for x in range(2):
            for y in range(2):
                total += g.coefficient(x, y, k) * table[x, y, k, d - k]
    if abs(total.imag) > imag_tol:
        raise ValueError(f"Bell value has imaginary part {total.imag:.2e}")
    return float(total.real)


def bell_operator(g: SatwapGame, alice, bob) -> np.ndarray:
    dA, dB = alice[0].shape[0], bob[0].shape[0]
    out = np.zeros((dA * dB, dA * dB), dtype=complex)
    for k in range(1, g.d):
        cs = c_operators(g, bob, k)
        for x in range(2):
            out += np.kron(np.linalg.matrix_power(alice[x], k), cs[x])
    return out


def satwap_sos_residual(d: int, s: QuantumStrategy) -> float:
    """Frobenius norm of ``2(d-1) 1 - B - 1/2 sum P^dagger P`` for ``s``'s observables."""
    g = SatwapGame(d)
    alice = [check_generalized(a, d) for a in s.alice]
    bob = [check_generalized(b, d) for b in s.bob]
    dA, dB = alice[0].shape[0], bob[0].shape[0]
    iA, iB = np.eye(dA), np.eye(dB)
    lhs = 2 * (d - 1) * np.eye(dA * dB) - bell_operator(g, alice, bob)
    rhs = np.zeros_like(lhs)
    for k in range(1, d):
        cs = c_operators(g, bob, k)
        for x in range(2):
            p = np.kron(dagger(np.linalg.matrix_power(alice[x], k)), iB) - np.kron(iA, cs[x])
            rhs += dagger(p) @ p / 2
    return float(np.linalg.norm(lhs - rhs))
