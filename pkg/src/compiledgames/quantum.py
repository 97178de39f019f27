"""Pure-state simulation of two-player strategies.

Observables are plain complex ``ndarray`` matrices.  A binary observable is
Hermitian with square identity; a generalized (d-outcome) observable is a
unitary whose d-th power is the identity, ``U = sum_a omega**a M_a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .games import BellFunctional, MnxParams, mnx_functional

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class ObservableError(ValueError):
    pass


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + dagger(m)) / 2


def check_binary(m, tol: float = 1e-10) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ObservableError(f"observable must be square, got {m.shape}")
    if np.abs(m - dagger(m)).max() > max(tol, 1e-12):
        raise ObservableError("observable is not Hermitian")
    if np.abs(m @ m - np.eye(len(m))).max() > tol:
        raise ObservableError("observable does not square to the identity")
    return m


def check_generalized(m, d: int, tol: float = 1e-8) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    eye = np.eye(len(m))
    if np.abs(dagger(m) @ m - eye).max() > max(tol, 1e-10):
        raise ObservableError("generalized observable is not unitary")
    if np.abs(np.linalg.matrix_power(m, d) - eye).max() > tol:
        raise ObservableError(f"generalized observable does not satisfy U^{d} = 1")
    return m


def unitary_power(m: np.ndarray, k: int) -> np.ndarray:
    """``m**k`` for a unitary, negative ``k`` through the adjoint."""
    if k < 0:
        return np.linalg.matrix_power(dagger(m), -k)
    return np.linalg.matrix_power(m, k)


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Unitary factor ``W V^dagger`` of the SVD ``m = W S V^dagger``."""
    w, _, vh = np.linalg.svd(m)
    return w @ vh


def hermitian_sign(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Polar unitary of a Hermitian matrix, i.e. ``sign(m)``; fails if singular."""
    w, v = np.linalg.eigh(hermitian_part(m))
    if np.abs(w).min() <= tol * max(1.0, np.abs(w).max()):
        raise ObservableError("combination is singular; its polar factor is not binary")
    return (v * np.sign(w)) @ dagger(v)


def projectors(m: np.ndarray, d: int) -> list[np.ndarray]:
    """Spectral projectors ``M_a = (1/d) sum_k omega**(-a k) U**k`` of a generalized observable."""
    omega = np.exp(2j * np.pi / d)
    powers = [np.linalg.matrix_power(m, k) for k in range(d)]
    return [sum(omega ** (-a * k) * powers[k] for k in range(d)) / d for a in range(d)]


def max_entangled(dim: int) -> np.ndarray:
    """``|phi+> = sum_i |ii> / sqrt(dim)``."""
    return np.eye(dim, dtype=complex).reshape(-1) / np.sqrt(dim)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_binary_observable(dim: int, rng: np.random.Generator, rank=None) -> np.ndarray:
    """``U diag(±1) U^dagger`` with a Haar-random ``U``."""
    rank = rng.integers(0, dim + 1) if rank is None else rank
    signs = np.ones(dim)
    signs[:rank] = -1
    u = random_unitary(dim, rng)
    return (u * signs) @ dagger(u)


def random_generalized_observable(dim: int, d: int, rng: np.random.Generator) -> np.ndarray:
    omega = np.exp(2j * np.pi / d)
    u = random_unitary(dim, rng)
    return (u * omega ** rng.integers(0, d, dim)) @ dagger(u)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dA, dB = self.dims
        if dA * dB != amps.size:
            raise ValueError(f"dims {self.dims} do not match {amps.size} amplitudes")
        if abs(np.linalg.norm(amps) - 1) > 1e-12:
            raise ValueError("state is not normalized")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", (int(dA), int(dB)))

    @classmethod
    def max_entangled(cls, dim: int) -> "StateVector":
        return cls(max_entangled(dim), (dim, dim))

    @classmethod
    def product(cls, a, b) -> "StateVector":
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        return cls(np.kron(a, b), (a.size, b.size))


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    """Shared state with one observable per question for each player.

    ``d`` is 2 for binary observables and the outcome count for generalized
    ones.
    """

    state: StateVector
    alice: Sequence[np.ndarray]
    bob: Sequence[np.ndarray]
    d: int = 2

    def __post_init__(self):
        dA, dB = self.state.dims
        check = check_binary if self.d == 2 else (lambda m: check_generalized(m, self.d))
        alice = tuple(check(m) for m in self.alice)
        bob = tuple(check(m) for m in self.bob)
        if any(m.shape != (dA, dA) for m in alice) or any(m.shape != (dB, dB) for m in bob):
            raise ValueError("observable dimensions do not match the bipartition")
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)

    @property
    def dims(self):
        return self.state.dims

    def lift_alice(self, m: np.ndarray) -> np.ndarray:
        return np.kron(m, np.eye(self.dims[1]))

    def lift_bob(self, m: np.ndarray) -> np.ndarray:
        return np.kron(np.eye(self.dims[0]), m)


def expectation(psi: np.ndarray, op: np.ndarray) -> complex:
    return complex(np.vdot(psi, op @ psi))


def correlator(s: QuantumStrategy, x: int, y: int) -> float:
    """``<psi| A_x (x) B_y |psi>`` for binary observables."""
    if not (0 <= x < len(s.alice) and 0 <= y < len(s.bob)):
        raise IndexError(f"question pair ({x}, {y}) out of range")
    value = expectation(s.state.amplitudes, np.kron(s.alice[x], s.bob[y]))
    if abs(value.imag) > 1e-10:
        raise ObservableError(f"correlator has imaginary part {value.imag:.2e}")
    return value.real


def correlation_matrix(s: QuantumStrategy) -> np.ndarray:
    return np.array([[correlator(s, x, y) for y in range(len(s.bob))] for x in range(len(s.alice))])


def bias_of_strategy(fn: BellFunctional, s: QuantumStrategy) -> float:
    if (len(s.alice), len(s.bob)) != fn.phi.shape:
        raise ValueError(
            f"strategy has {len(s.alice)}x{len(s.bob)} observables, functional is {fn.phi.shape}"
        )
    return float(np.sum(fn.phi * correlation_matrix(s)))


def bell_operator(fn: BellFunctional, alice, bob) -> np.ndarray:
    dA, dB = alice[0].shape[0], bob[0].shape[0]
    out = np.zeros((dA * dB, dA * dB), dtype=complex)
    for x, a in enumerate(alice):
        for y, b in enumerate(bob):
            if fn.phi[x, y]:
                out += fn.phi[x, y] * np.kron(a, b)
    return out


def alice_from_bob(fn: BellFunctional, bob, lambda_a=None) -> list[np.ndarray]:
    """Alice's best reply to ``bob`` on the maximally entangled state.

    Uses ``(1 (x) B)|phi+> = (B^T (x) 1)|phi+>`` so that the optimal ``A_x`` is
    the polar (sign) factor of ``sum_y phi[x, y] B_y^T``; ``lambda_a`` only
    rescales the combination and does not change the result.
    """
    bob = [check_binary(b) for b in bob]
    alice = []
    for x in range(fn.nA):
        combo = sum(fn.phi[x, y] * bob[y].T for y in range(fn.nB))
        if lambda_a is not None:
            combo = combo / lambda_a[x]
        if not np.any(np.abs(combo) > 0):
            raise ObservableError(f"row {x} of phi gives a zero combination")
        alice.append(hermitian_sign(combo))
    return alice


def chsh_optimal_strategy() -> QuantumStrategy:
    from .games import chsh

    bob = [SX, SZ]
    return QuantumStrategy(StateVector.max_entangled(2), alice_from_bob(chsh(), bob), bob)


def mnx_optimal_strategy(p: MnxParams) -> QuantumStrategy:
    if not p.violating:
        raise ValueError(f"{p} does not satisfy the violation condition")
    if abs(np.sin(p.mu)) < 1e-12:
        raise ValueError("sin(mu) = 0: the family is degenerate")
    bob = [SX, np.cos(p.mu) * SX + np.sin(p.mu) * SZ]
    alice = alice_from_bob(mnx_functional(p), bob)
    return QuantumStrategy(StateVector.max_entangled(2), alice, bob)


def elegant_optimal_strategy() -> QuantumStrategy:
    from .games import elegant

    bob = [SX, SY, SZ]
    return QuantumStrategy(StateVector.max_entangled(2), alice_from_bob(elegant(), bob), bob)
