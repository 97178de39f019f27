"""Crypto moment matrices and the pseudo-expectation map.

For an honest compiled prover the data are the crypto-correlators::

    corr[x, y, k, l] = E_enc sum_a omega**(k a) <psi_a| B_y^l |psi_a>

and the Bob-Bob moments averaged over first-round questions::

    gram[y, l, y', l'] = E_x E_enc sum_a <psi_a| B_y^l B_y'^l' |psi_a>.

The pseudo-expectation is the linear map on polynomials of degree at most
two that sends ``A_x^k B_y^l`` to ``corr`` and ``B_y^l B_y'^l'`` to ``gram``.
Monomials containing two different first-round observables have no
operational meaning in the compiled setting and are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .compiled import HonestProver, SecurityConfig, crypto_correlators, post_measurement_states
from .games import BellFunctional
from .satwap import SatwapGame, satwap_bounds
from .sdp import solve_xor_sdp
from .sos import SosCertificate, build_sos

Factor = tuple  # ("A", x, k) or ("B", y, l)


class InadmissiblePolynomial(ValueError):
    pass


class Degree2Poly:
    """Noncommutative polynomial of degree <= 2 in ``A_x^k`` and ``B_y^l``.

    Exponents are taken mod ``d``.  Alice and Bob factors commute, so mixed
    monomials are stored with the Alice factor first.  Build polynomials from
    :meth:`one`, :meth:`A` and :meth:`B` with ``+``, ``-``, ``*`` and
    :meth:`dagger`.
    """

    def __init__(self, d: int = 2, terms=None):
        self.d = d
        self.terms: dict[tuple, complex] = {}
        for mono, c in (terms or {}).items():
            self._add(mono, c)

    # -- construction ----------------------------------------------------

    @classmethod
    def one(cls, d: int = 2) -> "Degree2Poly":
        return cls(d, {(): 1.0})

    @classmethod
    def A(cls, x: int, k: int = 1, d: int = 2) -> "Degree2Poly":
        return cls(d, {(("A", x, k % d),): 1.0} if k % d else {(): 1.0})

    @classmethod
    def B(cls, y: int, l: int = 1, d: int = 2) -> "Degree2Poly":
        return cls(d, {(("B", y, l % d),): 1.0} if l % d else {(): 1.0})

    def _add(self, mono, c):
        if c == 0:
            return
        mono = self._normalize(mono)
        self.terms[mono] = self.terms.get(mono, 0) + c
        if self.terms[mono] == 0:
            del self.terms[mono]

    def _normalize(self, mono):
        out = []
        for f in mono:
            party, idx, power = f[0], f[1], f[2] % self.d
            if out and out[-1][0] == party and out[-1][1] == idx:
                power = (out[-1][2] + power) % self.d
                out.pop()
            if power:
                out.append((party, idx, power))
        if len(out) == 2 and out[0][0] == "B" and out[1][0] == "A":
            out = [out[1], out[0]]
        alice = [f for f in out if f[0] == "A"]
        if len(alice) > 1:
            raise InadmissiblePolynomial(
                f"monomial {tuple(out)} has two first-round observables"
            )
        if len(out) > 2:
            raise InadmissiblePolynomial(f"monomial {tuple(out)} has degree above 2")
        return tuple(out)

    def copy(self) -> "Degree2Poly":
        return Degree2Poly(self.d, dict(self.terms))

    def _coerce(self, other) -> "Degree2Poly":
        if isinstance(other, Degree2Poly):
            if other.d != self.d:
                raise ValueError("polynomials over different d")
            return other
        return Degree2Poly(self.d, {(): complex(other)})

    def __add__(self, other):
        other = self._coerce(other)
        out = self.copy()
        for mono, c in other.terms.items():
            out._add(mono, c)
        return out

    __radd__ = __add__

    def __neg__(self):
        return Degree2Poly(self.d, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Degree2Poly):
            return Degree2Poly(self.d, {m: c * other for m, c in self.terms.items()})
        other = self._coerce(other)
        out = Degree2Poly(self.d)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out._add(m1 + m2, c1 * c2)
        return out

    def __rmul__(self, other):
        return self * other

    def dagger(self) -> "Degree2Poly":
        out = Degree2Poly(self.d)
        for mono, c in self.terms.items():
            out._add(tuple((p, i, -k) for p, i, k in reversed(mono)), np.conj(c))
        return out

    def __repr__(self):
        def fmt(m):
            return "*".join(f"{p}{i}^{k}" for p, i, k in m) or "1"

        return " + ".join(f"({c:.4g}){fmt(m)}" for m, c in self.terms.items()) or "0"


@dataclass(frozen=True, eq=False)
class CryptoMomentMatrix:
    d: int
    corr: np.ndarray  # (nA, nB, d, d)
    gram: np.ndarray  # (nB, d, nB, d)

    @property
    def nA(self) -> int:
        return self.corr.shape[0]

    @property
    def nB(self) -> int:
        return self.corr.shape[1]

    @property
    def c_block(self) -> np.ndarray:
        """``<A_x, B_y>``; real for binary games."""
        c = self.corr[:, :, 1, 1]
        return c.real.copy() if self.d == 2 else c.copy()

    @property
    def s_block(self) -> np.ndarray:
        """``S[y, y'] = E_x E_enc sum_a <psi_a| B_y B_y' |psi_a>`` (first powers)."""
        return self.gram[:, 1, :, 1].copy()

    def q_tilde(self) -> np.ndarray:
        """``[[1, C], [C^dagger, S]]`` over labels ``(x, k)`` and ``(y, l)``, ``k, l >= 1``.

        Row ``(x, k)`` stands for ``(A_x^k)^dagger`` and column ``(y, l)`` for
        ``B_y^l``, so ``C`` holds ``<A_x^(d-k), B_y^l>`` and ``S`` holds
        ``<(B_y^l)^dagger B_y'^l'>``.  For ``d = 2`` this is the binary matrix.
        """
        d, nA, nB = self.d, self.nA, self.nB
        ks = range(1, d)
        na, nb = nA * (d - 1), nB * (d - 1)
        C = np.zeros((na, nb), dtype=complex)
        S = np.zeros((nb, nb), dtype=complex)
        for k in ks:
            for x in range(nA):
                for l in ks:
                    for y in range(nB):
                        C[(k - 1) * nA + x, (l - 1) * nB + y] = self.corr[x, y, (d - k) % d, l]
        for l in ks:
            for y in range(nB):
                for lp in ks:
                    for yp in range(nB):
                        S[(l - 1) * nB + y, (lp - 1) * nB + yp] = self.gram[y, (d - l) % d, yp, lp]
        top = np.hstack([np.eye(na), C])
        bottom = np.hstack([C.conj().T, S])
        q = np.vstack([top, bottom])
        return q.real if d == 2 else q

    def to_dict(self) -> dict:
        def enc(m):
            m = np.asarray(m)
            if np.iscomplexobj(m) and np.abs(m.imag).max(initial=0) > 1e-12:
                return {"re": m.real.tolist(), "im": m.imag.tolist()}
            return np.real(m).tolist()

        return {"d": self.d, "c_block": enc(self.c_block), "s_block": enc(self.s_block)}


def build_moment_matrix(prover: HonestProver, game=None, cfg: SecurityConfig | None = None):
    """Exact moments of an honest prover (``game`` and ``cfg`` are accepted for symmetry)."""
    d = prover.d
    corr = crypto_correlators(prover)
    bpow = [[prover.lift_bob(np.linalg.matrix_power(b, l)) for l in range(d)] for b in prover.bob]
    nB = prover.nB
    gram = np.zeros((nB * d, nB * d), dtype=complex)
    for x in range(prover.nA):
        for branch, (w, _) in enumerate(prover.kraus[x]):
            for _, phi in post_measurement_states(prover, x, branch):
                # <psi| B_y^l B_y'^l' |psi> = <(B_y^l)^dagger psi | B_y'^l' psi>
                left = np.array([bp.conj().T @ phi for row in bpow for bp in row])
                right = np.array([bp @ phi for row in bpow for bp in row])
                gram += (w / prover.nA) * (left.conj() @ right.T)
    gram = gram.reshape(nB, d, nB, d)
    return CryptoMomentMatrix(d, corr, gram)


def pseudo_expect(p: Degree2Poly, m: CryptoMomentMatrix) -> complex:
    if p.d != m.d:
        raise ValueError(f"polynomial over d = {p.d}, moments over d = {m.d}")
    total = 0j
    for mono, c in p.terms.items():
        total += c * _monomial(mono, m)
    return total


def _monomial(mono, m: CryptoMomentMatrix) -> complex:
    if len(mono) == 0:
        return 1.0
    for party, idx, _ in mono:
        bound = m.nA if party == "A" else m.nB
        if not 0 <= idx < bound:
            raise IndexError(f"{party}{idx} out of range")
    if len(mono) == 1:
        party, idx, k = mono[0]
        if party == "A":
            return m.corr[idx, 0, k, 0]
        return m.gram[idx, k, idx, 0]
    (p1, i1, k1), (p2, i2, k2) = mono
    if p1 == "A" and p2 == "B":
        return m.corr[i1, i2, k1, k2]
    if p1 == "B" and p2 == "B":
        return m.gram[i1, k1, i2, k2]
    raise InadmissiblePolynomial(f"monomial {mono} has two first-round observables")


# -- games as polynomials ----------------------------------------------------


def xor_bell_poly(fn: BellFunctional) -> Degree2Poly:
    out = Degree2Poly(2)
    for x in range(fn.nA):
        for y in range(fn.nB):
            if fn.phi[x, y]:
                out = out + fn.phi[x, y] * Degree2Poly.A(x) * Degree2Poly.B(y)
    return out


def satwap_c_poly(g: SatwapGame, x: int, k: int) -> Degree2Poly:
    d = g.d
    ak = g.a(k)
    b0, b1 = Degree2Poly.B(0, -k, d), Degree2Poly.B(1, -k, d)
    if x == 0:
        return ak * b0 + np.conj(ak) * g.omega**k * b1
    return np.conj(ak) * b0 + ak * b1


def satwap_bell_poly(g: SatwapGame) -> Degree2Poly:
    out = Degree2Poly(g.d)
    for k in range(1, g.d):
        for x in range(2):
            out = out + Degree2Poly.A(x, k, g.d) * satwap_c_poly(g, x, k)
    return out


@dataclass(frozen=True)
class SosTerm:
    label: str
    weight: float
    value: float  # E~[P^dagger P] (or E~[P] for the Bob-only polynomial)


@dataclass(frozen=True)
class SosCheck:
    terms: list
    delta: float
    tol: float
    passed: bool
    shifted: float  # xi_q - E~[B]
    weighted_sum: float  # sum of weight * value over terms

    @property
    def identity_residual(self) -> float:
        return abs(self.shifted - self.weighted_sum)

    def to_dict(self) -> dict:
        return {
            "terms": [{"label": t.label, "weight": t.weight, "value": t.value} for t in self.terms],
            "delta": self.delta,
            "tolerance": self.tol,
            "pass": self.passed,
            "shifted": self.shifted,
            "weighted_sum": self.weighted_sum,
            "identity_residual": self.identity_residual,
        }


def _real(z: complex, what: str) -> float:
    if abs(z.imag) > 1e-8:
        raise ValueError(f"{what} has imaginary part {z.imag:.2e}")
    return float(z.real)


def sos_polynomials(obj) -> list[tuple[str, float, Degree2Poly]]:
    """``(label, weight, P)`` with ``shifted operator = sum weight P^dagger P (+ Bob part)``."""
    if isinstance(obj, SosCertificate):
        out = []
        for weight, x, coeffs in obj.square_terms():
            p = Degree2Poly.A(x)
            for y, c in enumerate(coeffs):
                if c:
                    p = p - c * Degree2Poly.B(y)
            out.append((f"P_{x}", float(weight), p))
        return out
    if isinstance(obj, SatwapGame):
        d = obj.d
        return [
            (f"P_{x},{k}", 0.5, Degree2Poly.A(x, -k, d) - satwap_c_poly(obj, x, k))
            for k in range(1, d)
            for x in range(2)
        ]
    raise InadmissiblePolynomial(f"cannot build SOS polynomials from {type(obj).__name__}")


def bob_poly(cert: SosCertificate) -> Degree2Poly:
    p = cert.bob_offset * Degree2Poly.one()
    for y in range(cert.nB):
        for yp in range(cert.nB):
            if cert.bob_G[y, yp]:
                p = p - cert.bob_G[y, yp] * Degree2Poly.B(y) * Degree2Poly.B(yp)
    return p


def sos_term_check(
    obj, m: CryptoMomentMatrix, delta: float = 0.0, tol: float = 1e-9
) -> SosCheck:
    """Evaluate every ``E~[P^dagger P]``; pass iff each is at least ``-(delta + tol)``.

    ``tol`` absorbs floating-point error only; ``delta`` is the scheme's slack.
    """
    terms = []
    for label, weight, p in sos_polynomials(obj):
        terms.append(SosTerm(label, weight, _real(pseudo_expect(p.dagger() * p, m), label)))
    if isinstance(obj, SosCertificate):
        terms.append(SosTerm("P_bob", 1.0, _real(pseudo_expect(bob_poly(obj), m), "P_bob")))
        bell = _real(pseudo_expect(xor_bell_poly(BellFunctional("b", obj.phi)), m), "Bell")
        xi = obj.xi_q
    else:
        bell = _real(pseudo_expect(satwap_bell_poly(obj), m), "Bell")
        xi = satwap_bounds(obj.d)[1]
    passed = all(t.value >= -(delta + tol) for t in terms)
    weighted = float(sum(t.weight * t.value for t in terms))
    return SosCheck(terms, float(delta), float(tol), passed, xi - bell, weighted)


def compiled_bound_report(
    game: Union[BellFunctional, SatwapGame],
    m: CryptoMomentMatrix,
    cfg: SecurityConfig,
    tol: float = 1e-8,
) -> dict:
    """Compare the compiled value carried by ``m`` with the nonlocal quantum bound."""
    if isinstance(game, SatwapGame):
        compiled = _real(pseudo_expect(satwap_bell_poly(game), m), "Bell")
        xi_q = satwap_bounds(game.d)[1]
    else:
        compiled = _real(pseudo_expect(xor_bell_poly(game), m), "Bell")
        xi_q = solve_xor_sdp(game).dual_value
    excess = compiled - xi_q
    return {
        "compiled_bias": compiled,
        "xi_q": xi_q,
        "excess": excess,
        "delta_qhe": cfg.delta_qhe,
        "tolerance": tol,
        "pass": bool(excess <= cfg.delta_qhe + tol),
    }


def certificate_for(fn: BellFunctional) -> SosCertificate:
    return build_sos(fn, solve_xor_sdp(fn))
