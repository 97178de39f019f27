"""Level-one SDP for the quantum bias of correlation functionals.

Primal::

    max  Tr[Q Phi~]   s.t.  Q_ii = 1,  Q >= 0,      Phi~ = 1/2 [[0, Phi], [Phi^T, 0]]

Dual::

    min  Tr[Lambda] / 2   s.t.  Lambda / 2 - Phi~ >= 0,   Lambda diagonal.

The primal is solved with ADMM (exact projection onto the PSD cone by a
symmetric eigendecomposition, projection onto the unit-diagonal affine set
in closed form).  The dual vector is read off the multiplier of the diagonal
constraint, repaired to exact feasibility and rebalanced between the two
players so that ``sum(lambda_A) == sum(lambda_B) == dual_value``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .games import BellFunctional

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
MAX_ITERATIONS = 200_000
MAX_SIZE = 64


class NotConverged(RuntimeError):
    """ADMM hit its iteration cap; ``solution`` carries the best iterate."""

    def __init__(self, message, solution):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True, eq=False)
class SdpSolution:
    qtilde: np.ndarray
    lam: np.ndarray
    primal_value: float
    dual_value: float
    iterations: int
    converged: bool

    @property
    def gap(self) -> float:
        return self.dual_value - self.primal_value

    def split(self, nA: int):
        return self.lam[:nA], self.lam[nA:]


def phi_tilde(phi: np.ndarray) -> np.ndarray:
    nA, nB = phi.shape
    out = np.zeros((nA + nB, nA + nB))
    out[:nA, nA:] = phi / 2
    out[nA:, :nA] = phi.T / 2
    return out


def psd_project(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.T) / 2)
    return (v * np.clip(w, 0, None)) @ v.T


def min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.T) / 2)[0])


def dual_feasibility_defect(lam, fn: BellFunctional) -> float:
    """Smallest eigenvalue of ``diag(lam) / 2 - Phi~`` (feasible iff >= 0)."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (fn.nA + fn.nB,):
        raise ValueError(f"lambda must have length {fn.nA + fn.nB}")
    return min_eig(np.diag(lam) / 2 - phi_tilde(fn.phi))


def slackness_residual(sol: SdpSolution, fn: BellFunctional) -> float:
    """``|Tr[Q (Lambda/2 - Phi~)]|``; zero at an optimal primal/dual pair."""
    slack = np.diag(sol.lam) / 2 - phi_tilde(fn.phi)
    return float(abs(np.trace(sol.qtilde @ slack)))


def _feasible_primal(z: np.ndarray) -> np.ndarray:
    z = psd_project(z)
    d = np.sqrt(np.clip(np.diag(z), 1e-300, None))
    q = z / np.outer(d, d)
    np.fill_diagonal(q, 1.0)
    return q


def repair_dual(lam: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Make ``lam`` exactly dual feasible, then balance the two players' traces.

    Adds the (doubled) negative part of the smallest eigenvalue of the slack
    matrix to every entry, which is the minimal uniform shift.  Balancing
    multiplies Alice's block by ``t`` and Bob's by ``1/t``; by the Schur
    complement this keeps feasibility and never increases ``sum(lam) / 2``.
    """
    nA = phi.shape[0]
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, None)
    pt = phi_tilde(phi)
    for _ in range(8):
        defect = min_eig(np.diag(lam) / 2 - pt)
        if defect >= 0:
            break
        lam = lam + 2 * (-defect) * (1 + 1e-9) + 1e-15
    la, lb = lam[:nA], lam[nA:]
    sa, sb = la.sum(), lb.sum()
    if sa > 0 and sb > 0:
        t = np.sqrt(sb / sa)
        la, lb = la * t, lb / t
    lam = np.concatenate([la, lb])
    # balancing is exact in exact arithmetic; absorb rounding
    defect = min_eig(np.diag(lam) / 2 - pt)
    if defect < 0:
        lam = lam + 2 * (-defect) * (1 + 1e-9)
    return lam


def solve_xor_sdp(
    fn: BellFunctional,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITERATIONS,
    rho: float | None = None,
    check_every: int = 25,
) -> SdpSolution:
    """Quantum bias of ``fn`` with a certified primal/dual pair.

    Returns a solution whose ``gap`` (dual value of an exactly feasible dual
    vector minus the value of an exactly feasible Gram matrix) is at most
    ``tol``.  Raises :class:`NotConverged` otherwise.
    """
    if not 1e-12 <= tol <= 1e-3:
        raise ValueError(f"tol must lie in [1e-12, 1e-3], got {tol}")
    phi = fn.phi
    nA, nB = phi.shape
    n = nA + nB
    if n > MAX_SIZE:
        raise ValueError(f"nA + nB = {n} exceeds {MAX_SIZE}")

    if not np.any(phi):
        return SdpSolution(np.eye(n), np.zeros(n), 0.0, 0.0, 0, True)

    scale = np.abs(phi).max()
    c = -phi_tilde(phi / scale)
    rho = 1.0 if rho is None else rho
    z = np.eye(n)
    u = np.zeros((n, n))
    best = None
    for it in range(1, max_iter + 1):
        # x-update: projection onto {diag(x) = 1}
        x = z - u - c / rho
        nu = rho * (1.0 - np.diag(x))
        np.fill_diagonal(x, 1.0)
        z_old = z
        z = psd_project(x + u)
        u = u + x - z

        if it % check_every == 0 or it == max_iter:
            r_primal = np.linalg.norm(x - z)
            r_dual = rho * np.linalg.norm(z - z_old)
            q = _feasible_primal(z)
            primal = float(np.sum(q * phi_tilde(phi)))
            lam = repair_dual(-2 * nu * scale, phi)
            dual = float(lam.sum() / 2)
            if best is None or dual - primal < best[2] - best[1]:
                best = (q, primal, dual, lam)
            if dual - primal <= tol:
                log.debug("ADMM converged in %d iterations, gap %.3e", it, dual - primal)
                return SdpSolution(q, lam, primal, dual, it, True)
            # residual balancing
            if r_primal > 10 * r_dual:
                rho *= 2
                u /= 2
            elif r_dual > 10 * r_primal:
                rho /= 2
                u *= 2

    q, primal, dual, lam = best
    sol = SdpSolution(q, lam, primal, dual, max_iter, False)
    raise NotConverged(f"ADMM stopped after {max_iter} iterations, gap {dual - primal:.3e}", sol)


def vector_strategy_oracle(
    fn: BellFunctional,
    dim: int,
    restarts: int = 20,
    seed: int = 0,
    max_iter: int = 20_000,
    tol: float = 1e-13,
) -> float:
    """Lower bound on the quantum bias from unit-vector strategies in ``R^dim``.

    Block-coordinate ascent: each sweep replaces every ``a_x`` by the
    normalized gradient ``sum_y phi[x, y] b_y`` and then every ``b_y``
    likewise; this is projected gradient ascent with the exact step.  For
    ``dim >= nA + nB`` the global optimum is the SDP value.
    """
    phi = fn.phi
    nA, nB = phi.shape
    rng = np.random.default_rng(seed)

    def normalize(m, fallback):
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        keep = norms[:, 0] <= 1e-300
        out = m / np.where(keep[:, None], 1.0, norms)
        out[keep] = fallback[keep]
        return out

    best = -np.inf
    for _ in range(restarts):
        b = rng.standard_normal((nB, dim))
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        a = np.zeros((nA, dim))
        a[:, 0] = 1.0
        value = -np.inf
        for _ in range(max_iter):
            a = normalize(phi @ b, a)
            b = normalize(phi.T @ a, b)
            new = float(np.sum(phi * (a @ b.T)))
            if new - value <= tol:
                value = new
                break
            value = new
        best = max(best, value)
    return best
