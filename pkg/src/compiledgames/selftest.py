"""Self-testing certificates computed from honest-prover internals.

Every residual is a state-weighted squared norm
``sum_branches w sum_a || R |psi_a> ||^2`` over the post-measurement states
of one first-round question, so it is nonnegative and invariant under global
phases and simultaneous unitary conjugation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .compiled import HonestProver, exact_compiled_bias, post_measurement_states
from .games import MnxParams, elegant, mnx_functional, mnx_quantum_bound
from .quantum import check_binary
from .satwap import SatwapGame, c_operators, satwap_bounds
from .sdp import solve_xor_sdp
from .sos import build_sos

PASS_SLACK = 1e-12


@dataclass
class SelfTestReport:
    family: str
    residuals: dict
    bounds: dict
    eps: Optional[float] = None
    delta: Optional[float] = None
    extracted: Optional[dict] = None
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> Optional[bool]:
        """All residuals under their bounds; ``None`` when no bound is claimed."""
        checked = [k for k in self.residuals if self.bounds.get(k) is not None]
        if not checked:
            return None
        return all(self.residuals[k] <= self.bounds[k] + PASS_SLACK for k in checked)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "eps": self.eps,
            "delta": self.delta,
            "residuals": self.residuals,
            "bounds": self.bounds,
            "pass": self.passed,
            "extracted": self.extracted,
            "notes": self.notes,
        }


def weighted_states(prover: HonestProver, x: int):
    """``[(weight, a, psi_a)]`` over all encryption branches of question ``x``."""
    out = []
    for branch, (w, _) in enumerate(prover.kraus[x]):
        out.extend((w, a, psi) for a, psi in post_measurement_states(prover, x, branch))
    return out


def state_residual(op: np.ndarray, states) -> float:
    """``sum w ||op psi||^2`` over ``(w, psi)`` or ``(w, a, psi)`` entries."""
    total = 0.0
    for entry in states:
        w, psi = entry[0], entry[-1]
        v = op @ psi
        total += w * float(np.vdot(v, v).real)
    return total


def anticommutator_residual(B1, B2, target: float, states) -> float:
    """``sum w ||(target 1 - {B1, B2}) psi||^2``.

    ``states`` holds ``(weight, psi)`` pairs, ``psi`` possibly unnormalized;
    the total probability ``sum w ||psi||^2`` must be 1.
    """
    B1, B2 = check_binary(B1), check_binary(B2)
    if B1.shape != B2.shape:
        raise ValueError("observables have different dimensions")
    states = list(states)
    mass = sum(e[0] * float(np.vdot(e[-1], e[-1]).real) for e in states)
    if abs(mass - 1) > 1e-10:
        raise ValueError(f"state weights carry total probability {mass}, not 1")
    op = target * np.eye(len(B1)) - (B1 @ B2 + B2 @ B1)
    return state_residual(op, states)


def jordan_extract(B1, B2, tol: float = 1e-7) -> list[float]:
    """Block angles ``mu_i`` with ``{B1, B2} = 2 cos(mu_i)`` on each Jordan block.

    Every 2x2 block contributes a doubly degenerate eigenvalue ``cos mu_i`` of
    ``{B1, B2} / 2``; paired eigenvalues are merged into one angle.  A 1x1
    block (eigenvalue ``±1`` with no partner) is treated as half of a 2x2 block
    and reported on its own.
    """
    B1, B2 = check_binary(B1), check_binary(B2)
    if B1.shape != B2.shape:
        raise ValueError("observables have different dimensions")
    half = (B1 @ B2 + B2 @ B1) / 2
    cosines = np.clip(np.linalg.eigvalsh((half + half.conj().T) / 2), -1, 1)
    angles = np.sort(np.arccos(cosines))
    out, i = [], 0
    while i < len(angles):
        if i + 1 < len(angles) and abs(angles[i + 1] - angles[i]) <= tol:
            out.append(float((angles[i] + angles[i + 1]) / 2))
            i += 2
        else:
            out.append(float(angles[i]))
            i += 1
    return out


# -- correlation-inequality families -----------------------------------------


def _hat_coefficients(fn, sol=None):
    """Weights ``lambda_x / 2`` and rows ``F[x]`` with ``P_x = A_x - F[x] . B``."""
    cert = build_sos(fn, sol if sol is not None else solve_xor_sdp(fn))
    return cert, cert.lambda_a / 2, cert.F


def _lift_bob(prover: HonestProver):
    return [prover.lift_bob(b) for b in prover.bob]


def _eps(fn, prover, xi_q) -> float:
    eps = xi_q - exact_compiled_bias(fn, prover)
    if eps < -1e-8:
        raise ValueError(f"prover exceeds the quantum bound by {-eps:.3e}")
    return max(eps, 0.0)


def mnx_selftest(prover: HonestProver, p: MnxParams, delta: float = 0.0) -> SelfTestReport:
    """Anticommutator self-test for the two-parameter family of Bob pairs.

    For each question ``x`` the SOS term ``c_x (A_x - Bhat_x)^2`` bounds
    ``sum_a ||(Bhat_x - (-1)^a) psi_a||^2`` by ``(eps + delta (c_0 + c_1)) / c_x``.
    Since ``Bhat_x^2 - 1 = f_0 f_1 ({B_0, B_1} - 2 cos mu)`` for binary
    ``B``, and ``(1 - Bhat^2) psi = -(Bhat + s)(Bhat - s) psi``, the
    anticommutator residual on question ``x``'s states is at most
    ``(1 + ||Bhat_x||)^2 / (f_0 f_1)^2`` times that.
    """
    if not p.violating:
        raise ValueError(f"{p} does not satisfy the violation condition")
    beta_q = mnx_quantum_bound(p)
    if beta_q < 1e-9:
        raise ValueError("degenerate parameters: the quantum bound is 0")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    fn = mnx_functional(p)
    cert, c, F = _hat_coefficients(fn)
    eps = _eps(fn, prover, beta_q)
    B0, B1 = _lift_bob(prover)
    target = 2 * np.cos(p.mu)
    c_sum = float(c.sum())

    residuals, bounds, quoted = {}, {}, {}
    for x in range(2):
        f0, f1 = F[x]
        states = weighted_states(prover, x)
        bhat = f0 * B0 + f1 * B1
        sq = eps + delta * c_sum
        # ||(Bhat_x - (-1)^a) psi_a||^2 summed over a
        hat_res = sum(
            w * float(np.linalg.norm(bhat @ psi - (1 - 2 * (a % 2)) * psi) ** 2)
            for w, a, psi in states
        )
        residuals[f"hat_{x}"] = hat_res
        bounds[f"hat_{x}"] = sq / c[x]
        norm_hat = abs(f0) + abs(f1)
        residuals[f"anticomm_{x}"] = anticommutator_residual(
            B0, B1, target, [(w, psi) for w, _, psi in states]
        )
        bounds[f"anticomm_{x}"] = (1 + norm_hat) ** 2 / (f0 * f1) ** 2 * sq / c[x]
        # the commonly quoted closed form, kept for comparison only: it drops
        # a cross term of the norm estimate and can come out negative
        ang = p.nu if x == 0 else p.chi
        cx_lit = c[x] / np.sin(p.mu) ** 2
        quoted[f"anticomm_{x}"] = float(
            np.sin(p.mu) ** 2
            * (2 * np.cos(p.mu) + 1 / (np.cos(ang) * np.cos(ang + p.mu)))
            * (eps / cx_lit + c_sum / np.sin(p.mu) ** 2 / cx_lit * delta)
        )
    return SelfTestReport(
        "mnx",
        residuals,
        bounds,
        eps=eps,
        delta=delta,
        extracted={"angles": jordan_extract(prover.bob[0], prover.bob[1])},
        notes={"target": target, "beta_q": beta_q, "quoted_bounds": quoted},
    )


ELEGANT_PAIRS = ((0, 1), (1, 2), (0, 2))


def elegant_bound(eps: float, delta: float) -> float:
    """``6(3 + sqrt 3) eps + 36(1 + sqrt 3) delta``."""
    return 6 * (3 + np.sqrt(3)) * eps + 36 * (1 + np.sqrt(3)) * delta


def elegant_rigorous_bound(eps: float, delta: float) -> float:
    """Bound with the full ``(1 + ||Bhat||)^2`` factor, ``||Bhat|| <= sqrt 3``.

    Each question gives ``sum_a ||(Bhat_x - (-1)^a) psi_a||^2 <= 2 eps / sqrt 3 + 4 delta``,
    the four sign patterns of anticommutators sum to four times their squared
    norms, hence each pair is at most ``9 (1 + sqrt 3)^2 (2 eps / sqrt 3 + 4 delta)``.
    """
    return 9 * (1 + np.sqrt(3)) ** 2 * (2 * eps / np.sqrt(3) + 4 * delta)


def elegant_selftest(prover: HonestProver, delta: float = 0.0, x: int = 0) -> SelfTestReport:
    """Pairwise anticommutator residuals of Bob's three observables on question ``x``'s states."""
    if len(prover.bob) != 3 or prover.nA != 4:
        raise ValueError("the elegant test needs four first-round and three second-round questions")
    fn = elegant()
    eps = _eps(fn, prover, 4 * np.sqrt(3))
    bobs = _lift_bob(prover)
    states = [(w, psi) for w, _, psi in weighted_states(prover, x)]
    bound = elegant_bound(eps, delta)
    residuals, bounds = {}, {}
    for i, j in ELEGANT_PAIRS:
        key = f"anticomm_{i}{j}"
        residuals[key] = anticommutator_residual(bobs[i], bobs[j], 0.0, states)
        bounds[key] = bound
    return SelfTestReport(
        "elegant",
        residuals,
        bounds,
        eps=eps,
        delta=delta,
        notes={"rigorous_bound": elegant_rigorous_bound(eps, delta), "question": x},
    )


def satwap_selftest_residuals(prover: HonestProver, d: int) -> SelfTestReport:
    """Residuals of ``[C_x^(1)]^k = C_x^(k)`` and ``C_x^(d-k) C_x^(k) = 1`` on the states.

    Also reports the eigen-relation ``C_x^(k) psi_a = omega**(-k a) psi_a``
    that a vanishing SOS term forces.  No pass bound is claimed.
    """
    if prover.d != d or len(prover.bob) != 2 or prover.nA != 2:
        raise ValueError("prover does not match a SATWAP game with this d")
    if d > 8:
        raise ValueError("satwap self-test residuals are limited to d <= 8")
    g = SatwapGame(d)
    omega = g.omega
    cs = {k: [prover.lift_bob(c) for c in c_operators(g, prover.bob, k)] for k in range(d)}
    eye = np.eye(cs[0][0].shape[0])
    residuals = {}
    for x in range(2):
        states = weighted_states(prover, x)
        c1 = cs[1][x]
        for k in range(1, d):
            ck = cs[k][x]
            residuals[f"power_{x}_{k}"] = state_residual(np.linalg.matrix_power(c1, k) - ck, states)
            residuals[f"unit_{x}_{k}"] = state_residual(cs[d - k][x] @ ck - eye, states)
            residuals[f"eigen_{x}_{k}"] = sum(
                w * float(np.linalg.norm(ck @ psi - omega ** (-k * a) * psi) ** 2)
                for w, a, psi in states
            )
    eps = satwap_bounds(d)[1] - exact_compiled_bias(g, prover)
    return SelfTestReport(
        "satwap", residuals, {k: None for k in residuals}, eps=float(eps), delta=None
    )
