"""Sum-of-squares certificates for correlation functionals.

From a diagonal dual certificate ``Lambda = diag(lambda_A, lambda_B)`` the
shifted Bell operator decomposes as::

    xi 1 - B  =  sum_x lambda_x / 2 (A_x - sum_y F[x, y] B_y)^2  +  P(B),
    F = Lambda_A^{-1} Phi,
    P(B) = offset 1 - sum_{y y'} G[y, y'] B_y B_y',
    G = Phi^T Lambda_A^{-1} Phi / 2,   offset = xi - sum(lambda_A) / 2.

The identity is algebraic: it holds for every choice of binary observables.
``P`` is positive semidefinite whenever ``Lambda / 2 - Phi~ >= 0`` and
``xi >= (sum(lambda_A) + sum(lambda_B)) / 2``, by a Schur-complement argument.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .games import BellFunctional
from .quantum import QuantumStrategy, check_binary
from .sdp import SdpSolution

log = logging.getLogger(__name__)

LAMBDA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SosCertificate:
    phi: np.ndarray
    lambda_a: np.ndarray
    lambda_b: np.ndarray
    F: np.ndarray
    bob_offset: float
    bob_G: np.ndarray
    xi_q: float
    active: np.ndarray  # rows of phi that carry a square term

    @property
    def nA(self) -> int:
        return self.phi.shape[0]

    @property
    def nB(self) -> int:
        return self.phi.shape[1]

    def schur_defect(self) -> float:
        """Smallest eigenvalue of ``Lambda_B - Phi^T Lambda_A^{-1} Phi``."""
        return float(np.linalg.eigvalsh(np.diag(self.lambda_b) - 2 * self.bob_G)[0])

    def square_terms(self):
        """``(weight, x, coefficients)`` with square ``weight (A_x - coefficients . B)^2``."""
        return [(self.lambda_a[x] / 2, x, self.F[x]) for x in np.flatnonzero(self.active)]

    def to_dict(self) -> dict:
        return {
            "xi_q": self.xi_q,
            "lambda_a": self.lambda_a.tolist(),
            "lambda_b": self.lambda_b.tolist(),
            "F": self.F.tolist(),
            "bob_poly": {"offset": self.bob_offset, "G": self.bob_G.tolist()},
            "schur_defect": self.schur_defect(),
        }


def _lambda_parts(fn: BellFunctional, sol: SdpSolution):
    lam = np.asarray(sol.lam, dtype=float)
    if lam.shape != (fn.nA + fn.nB,):
        raise ValueError("solution does not match the functional")
    la, lb = lam[: fn.nA].copy(), lam[fn.nA :].copy()
    active = np.any(fn.phi != 0, axis=1)
    for x in np.flatnonzero(~active):
        log.info("row %d of phi is zero; its square term is dropped", x)
    if np.any(la[active] <= 0):
        raise ValueError("dual certificate has a non-positive entry on a nonzero row")
    la = np.maximum(la, LAMBDA_FLOOR)
    return la, lb, active


def build_sos(fn: BellFunctional, sol: SdpSolution) -> SosCertificate:
    la, lb, active = _lambda_parts(fn, sol)
    F = np.where(active[:, None], fn.phi / la[:, None], 0.0)
    G = (fn.phi[active].T / la[active]) @ fn.phi[active] / 2
    xi = float(sol.dual_value)
    offset = xi - float(la[active].sum()) / 2
    return SosCertificate(fn.phi, la, lb, F, offset, (G + G.T) / 2, xi, active)


@dataclass(frozen=True, eq=False)
class OstrevVectors:
    """Rows ``u[i]`` in ``R^nA`` and ``v[i]`` in ``R^nB``."""

    u: np.ndarray
    v: np.ndarray

    def relation_defects(self, fn: BellFunctional, lam: np.ndarray) -> dict:
        """Deviations in the three defining relations (the last should be >= 0)."""
        la, lb = lam[: fn.nA], lam[fn.nA :]
        return {
            "uu": float(np.abs(self.u.T @ self.u - np.diag(la) / 2).max()),
            "uv": float(np.abs(self.u.T @ self.v - fn.phi / 2).max()),
            "vv_min_eig": float(np.linalg.eigvalsh(np.diag(lb) / 2 - self.v.T @ self.v)[0]),
        }


def ostrev_vectors(fn: BellFunctional, sol: SdpSolution) -> OstrevVectors:
    """``u_i = sqrt(lambda_i / 2) e_i`` and ``v_i = phi[i] sqrt(lambda_i / 2) / lambda_i``."""
    la, _, active = _lambda_parts(fn, sol)
    scale = np.sqrt(la / 2)
    u = np.diag(scale)
    v = np.where(active[:, None], fn.phi * (scale / la)[:, None], 0.0)
    return OstrevVectors(u, v)


def ostrev_gap(fn: BellFunctional, sol: SdpSolution, a_vecs, b_vecs) -> float:
    """``Tr[Lambda]/2 - sum phi <A_i|B_j> - sum_i ||sum_j u_ij A_j - v_ij B_j||^2``.

    Nonnegative for any unit strategy vectors (rows of ``a_vecs``, ``b_vecs``).
    """
    ov = ostrev_vectors(fn, sol)
    a = np.asarray(a_vecs)
    b = np.asarray(b_vecs)
    diffs = ov.u @ a - ov.v @ b
    lhs = float(np.sum(np.abs(diffs) ** 2))
    rhs = float(sol.lam.sum() / 2 - np.real(np.sum(fn.phi * (a.conj() @ b.T))))
    return rhs - lhs


def _observables(realization):
    if isinstance(realization, QuantumStrategy):
        return list(realization.alice), list(realization.bob)
    alice, bob = realization
    return [check_binary(a) for a in alice], [check_binary(b) for b in bob]


def assemble_bob_poly(cert: SosCertificate, bob) -> np.ndarray:
    dB = bob[0].shape[0]
    out = cert.bob_offset * np.eye(dB, dtype=complex)
    for y in range(cert.nB):
        for yp in range(cert.nB):
            if cert.bob_G[y, yp]:
                out -= cert.bob_G[y, yp] * bob[y] @ bob[yp]
    return out


def verify_sos_identity(cert: SosCertificate, realization) -> float:
    """Frobenius norm of ``xi 1 - B - (sum of squares + P)`` for given observables.

    ``realization`` is a :class:`QuantumStrategy` or an ``(alice, bob)`` pair
    of binary observable lists; the state plays no role.
    """
    alice, bob = _observables(realization)
    if len(alice) != cert.nA or len(bob) != cert.nB:
        raise ValueError("realization does not match the certificate's question sets")
    dA, dB = alice[0].shape[0], bob[0].shape[0]
    iA, iB = np.eye(dA), np.eye(dB)
    A = [np.kron(a, iB) for a in alice]
    B = [np.kron(iA, b) for b in bob]
    n = dA * dB
    lhs = cert.xi_q * np.eye(n, dtype=complex)
    for x in range(cert.nA):
        for y in range(cert.nB):
            if cert.phi[x, y]:
                lhs -= cert.phi[x, y] * A[x] @ B[y]
    rhs = np.kron(iA, assemble_bob_poly(cert, bob))
    for weight, x, coeffs in cert.square_terms():
        p = A[x] - sum(c * b for c, b in zip(coeffs, B))
        rhs += weight * p @ p
    return float(np.linalg.norm(lhs - rhs))


def bob_poly_psd_defect(cert: SosCertificate, bob) -> float:
    """Smallest eigenvalue of ``P(B)``; nonnegative for binary observables."""
    bob = [check_binary(b) for b in bob]
    p = assemble_bob_poly(cert, bob)
    return float(np.linalg.eigvalsh((p + p.conj().T) / 2)[0])


def ax_residuals(fn: BellFunctional, cert: SosCertificate, s: QuantumStrategy) -> np.ndarray:
    """``|| A_x|psi> - sum_y F[x, y] B_y|psi> ||`` per question ``x``.

    All vanish for an optimal strategy: Alice's vectors are fixed by Bob's.
    """
    psi = s.state.amplitudes
    out = np.zeros(fn.nA)
    for x in range(fn.nA):
        vec = s.lift_alice(s.alice[x]) @ psi
        vec = vec - sum(cert.F[x, y] * (s.lift_bob(s.bob[y]) @ psi) for y in range(fn.nB))
        out[x] = np.linalg.norm(vec)
    return out
