"""Simulated single-prover compilation of two-player games.

In each round the verifier samples ``(x, y)``, sends ``Enc(x)``, receives an
encrypted answer, then sends ``y`` in the clear and receives ``b``.

Homomorphic evaluation is not implemented cryptographically.  The harness
holds the key and applies the honest prover's registered Kraus family for the
true plaintext, so the prover's classical view contains only the ciphertext.
This is a scheme with perfect correctness and, at zero leakage, perfect
hiding.  Leakage is modeled by ciphertexts that carry the plaintext in the
clear with some probability.
"""

from __future__ import annotations

import hashlib
import hmac
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .games import BellFunctional, GuardExceeded
from .quantum import QuantumStrategy, StateVector, dagger, projectors
from .satwap import SatwapGame, satwap_value

Game = Union[BellFunctional, SatwapGame]

MAX_CLASSICAL_TABLES = 2**20


# -- encryption schemes ------------------------------------------------------


@dataclass(frozen=True)
class Ciphertext:
    nonce: int
    body: int
    visible: Optional[int] = None  # plaintext, when the ciphertext leaks it


class Scheme:
    """Symmetric scheme on small integer messages ``0 <= m < modulus``."""

    name = "scheme"
    modulus = 256

    def gen(self, kappa: int, rng: np.random.Generator) -> bytes:
        if kappa < 8 or kappa % 8:
            raise ValueError(f"kappa must be a positive multiple of 8, got {kappa}")
        return rng.bytes(kappa // 8)

    def enc(self, key: bytes, m: int, rng: np.random.Generator) -> Ciphertext:
        raise NotImplementedError

    def dec(self, key: bytes, ct: Ciphertext) -> int:
        raise NotImplementedError

    def _check(self, m: int) -> int:
        if not 0 <= int(m) < self.modulus:
            raise ValueError(f"message {m} outside 0..{self.modulus - 1}")
        return int(m)


def _pad(key: bytes, nonce: int, modulus: int) -> int:
    digest = hmac.new(key, nonce.to_bytes(8, "big"), hashlib.sha256).digest()
    return int.from_bytes(digest[:8], "big") % modulus


class TransparentScheme(Scheme):
    """``Enc(m) = m``: no security at all."""

    name = "transparent"

    def enc(self, key, m, rng):
        m = self._check(m)
        return Ciphertext(int(rng.integers(2**63)), m, visible=m)

    def dec(self, key, ct):
        return ct.body


class KeyedPadScheme(Scheme):
    """``body = m + HMAC-SHA256(key, nonce) mod modulus`` with a fresh 64-bit nonce."""

    name = "pad"

    def enc(self, key, m, rng):
        m = self._check(m)
        nonce = int(rng.integers(2**63))
        return Ciphertext(nonce, (m + _pad(key, nonce, self.modulus)) % self.modulus)

    def dec(self, key, ct):
        return (ct.body - _pad(key, ct.nonce, self.modulus)) % self.modulus


class LeakyScheme(KeyedPadScheme):
    """Keyed pad whose ciphertexts reveal the plaintext with probability ``p``."""

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"leakage probability must lie in [0, 1], got {p}")
        self.p = float(p)
        self.name = f"leaky:{p:g}"

    def enc(self, key, m, rng):
        ct = super().enc(key, m, rng)
        if rng.random() < self.p:
            return Ciphertext(ct.nonce, ct.body, visible=int(m))
        return ct


def make_scheme(spec: str) -> Scheme:
    """``transparent``, ``pad`` or ``leaky:P``."""
    if spec == "transparent":
        return TransparentScheme()
    if spec == "pad":
        return KeyedPadScheme()
    if spec.startswith("leaky:"):
        try:
            p = float(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad leakage probability in {spec!r}") from None
        return LeakyScheme(p)
    raise ValueError(f"unknown scheme {spec!r}")


def leakage_of(scheme: Scheme) -> float:
    if isinstance(scheme, TransparentScheme):
        return 1.0
    return getattr(scheme, "p", 0.0)


@dataclass(frozen=True)
class SecurityConfig:
    kappa: int = 128
    leakage_p: float = 0.0
    delta_qhe: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.leakage_p <= 1.0:
            raise ValueError(f"leakage_p must lie in [0, 1], got {self.leakage_p}")
        if self.delta_qhe < 0:
            raise ValueError(f"delta_qhe must be >= 0, got {self.delta_qhe}")

    def scheme(self) -> Scheme:
        return LeakyScheme(self.leakage_p) if self.leakage_p > 0 else KeyedPadScheme()


# -- IND-CPA -----------------------------------------------------------------


class Distinguisher:
    """Chooses two messages, may query an encryption oracle, then guesses."""

    def choose(self, rng) -> tuple[int, int]:
        return 0, 1

    def guess(self, ct: Ciphertext, messages, oracle, rng) -> int:
        raise NotImplementedError


class FrequencyDistinguisher(Distinguisher):
    """Encrypts ``m0`` a few times and answers 0 iff the challenge body was seen.

    Wins every time against deterministic encryption.
    """

    def __init__(self, queries: int = 4):
        self.queries = queries

    def guess(self, ct, messages, oracle, rng):
        seen = {oracle(messages[0]).body for _ in range(self.queries)}
        if ct.body in seen:
            return 0
        if any(oracle(messages[1]).body == ct.body for _ in range(self.queries)):
            return 1
        return int(rng.integers(2))


class PeekDistinguisher(Distinguisher):
    """Reads a leaked plaintext when there is one, otherwise guesses at random."""

    def guess(self, ct, messages, oracle, rng):
        if ct.visible is not None:
            return int(ct.visible == messages[1])
        return int(rng.integers(2))


class BodyDistinguisher(Distinguisher):
    """Treats the ciphertext body as the plaintext."""

    def guess(self, ct, messages, oracle, rng):
        return int(ct.body == messages[1])


@dataclass(frozen=True)
class IndCpaResult:
    advantage: float
    stderr: float
    trials: int


def ind_cpa_experiment(
    scheme: Scheme, distinguisher: Distinguisher, trials: int, seed: int, kappa: int = 128
) -> IndCpaResult:
    """Empirical ``Pr[guess == b] - 1/2`` with a fresh key per trial."""
    if trials < 1000:
        raise ValueError("use at least 1000 trials")
    wins = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        key = scheme.gen(kappa, rng)
        m0, m1 = distinguisher.choose(rng)
        b = int(rng.integers(2))
        ct = scheme.enc(key, (m0, m1)[b], rng)
        oracle = lambda m: scheme.enc(key, m, rng)
        wins += distinguisher.guess(ct, (m0, m1), oracle, rng) == b
    p = wins / trials
    # stderr of the win rate; floor keeps the 3-sigma test meaningful when p is 0 or 1
    stderr = max(np.sqrt(p * (1 - p) / trials), 0.5 / trials)
    return IndCpaResult(p - 0.5, float(stderr), trials)


# -- provers -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HonestProver:
    """Quantum prover given by first-round Kraus families and second-round observables.

    ``kraus[x]`` is a list of ``(weight, [M_0, ..., M_{d-1}])`` branches; the
    branch is chosen by the encryption randomness, so ``weight`` is its
    probability over ``Enc(x)``.  Kraus operators act on the whole register;
    ``bob[y]`` acts on the second tensor factor of ``state.dims``.
    """

    state: StateVector
    kraus: Sequence[Sequence[tuple[float, Sequence[np.ndarray]]]]
    bob: Sequence[np.ndarray]
    d: int = 2

    def __post_init__(self):
        n = self.state.amplitudes.size
        dB = self.state.dims[1]
        for x, branches in enumerate(self.kraus):
            weights = [w for w, _ in branches]
            if any(w < 0 for w in weights) or abs(sum(weights) - 1) > 1e-12:
                raise ValueError(f"branch weights for x = {x} must be a distribution")
            for _, ops in branches:
                if len(ops) != self.d:
                    raise ValueError(f"need {self.d} Kraus operators per branch")
                total = sum(dagger(m) @ m for m in ops)
                if np.abs(total - np.eye(n)).max() > 1e-10:
                    raise ValueError(f"Kraus family for x = {x} is not complete")
        for b in self.bob:
            if b.shape != (dB, dB):
                raise ValueError("second-round observable has the wrong dimension")

    @property
    def nA(self) -> int:
        return len(self.kraus)

    @property
    def nB(self) -> int:
        return len(self.bob)

    def lift_bob(self, m: np.ndarray) -> np.ndarray:
        return np.kron(np.eye(self.state.dims[0]), m)

    @classmethod
    def from_strategy(cls, s: QuantumStrategy) -> "HonestProver":
        """Sequential version of a nonlocal strategy: measure ``A_x``, then ``B_y``."""
        kraus = [[(1.0, [s.lift_alice(p) for p in projectors(a, s.d)])] for a in s.alice]
        return cls(s.state, kraus, list(s.bob), s.d)


@dataclass(frozen=True, eq=False)
class ClassicalProver:
    """Deterministic classical prover for binary games.

    ``alpha[x]`` is the first answer, computed under encryption so the prover
    never learns it; ``beta[y]`` is the second answer.  When ``exploit_leaks``
    is set and the ciphertext leaks ``x``, the prover instead picks ``b`` to
    win the round.
    """

    alpha: Sequence[int]
    beta: Sequence[int]
    exploit_leaks: bool = True

    @property
    def nA(self) -> int:
        return len(self.alpha)

    @property
    def nB(self) -> int:
        return len(self.beta)


def classical_as_kraus(fn: BellFunctional, prover: ClassicalProver, leakage_p: float) -> HonestProver:
    """The same classical prover written as Kraus maps, so moments can be built.

    The second-round register has a ``hidden`` basis state and one state per
    question ``x``.  On a leaked branch the first round moves the register to
    ``|x>``, which is how a leak lets the second answer depend on ``x``.
    """
    if not 0.0 <= leakage_p <= 1.0:
        raise ValueError("leakage_p must lie in [0, 1]")
    nA, nB = fn.phi.shape
    f = fn.predicate()
    dim = nA + 1
    eye = np.eye(dim)
    kraus = []
    for x in range(nA):
        swap = eye.copy()
        swap[[0, 1 + x]] = swap[[1 + x, 0]]
        branches = []
        for w, op in ((1 - leakage_p, eye), (leakage_p, swap)):
            if w > 0:
                ops = [np.zeros((dim, dim)), np.zeros((dim, dim))]
                ops[prover.alpha[x]] = op
                branches.append((w, ops))
        kraus.append(branches)
    bob = []
    for y in range(nB):
        diag = np.empty(dim)
        diag[0] = 1 - 2 * prover.beta[y]
        for x in range(nA):
            bit = prover.alpha[x] ^ f[x, y] if prover.exploit_leaks else prover.beta[y]
            diag[1 + x] = 1 - 2 * bit
        bob.append(np.diag(diag).astype(complex))
    state = StateVector(np.eye(dim)[0], (1, dim))
    return HonestProver(state, kraus, bob, 2)


def post_measurement_states(prover: HonestProver, x: int, branch: int = 0):
    """``[(a, M_a|psi>)]`` for one encryption branch (unnormalized states)."""
    _, ops = prover.kraus[x][branch]
    psi = prover.state.amplitudes
    return [(a, m @ psi) for a, m in enumerate(ops)]


def decrypted_observable(prover: HonestProver, x: int, k: int = 1) -> np.ndarray:
    """``E_enc sum_a omega**(k a) M_a^dagger M_a``."""
    omega = np.exp(2j * np.pi / prover.d)
    out = 0
    for w, ops in prover.kraus[x]:
        out = out + w * sum(omega ** (k * a) * dagger(m) @ m for a, m in enumerate(ops))
    return out


def crypto_correlators(prover: HonestProver) -> np.ndarray:
    """``table[x, y, k, l] = E_enc sum_a omega**(k a) <psi_a| B_y^l |psi_a>``."""
    d = prover.d
    omega = np.exp(2j * np.pi / d)
    bpow = [[prover.lift_bob(np.linalg.matrix_power(b, l)) for l in range(d)] for b in prover.bob]
    table = np.zeros((prover.nA, prover.nB, d, d), dtype=complex)
    for x in range(prover.nA):
        for branch, (w, _) in enumerate(prover.kraus[x]):
            for a, phi in post_measurement_states(prover, x, branch):
                phase = omega ** (np.arange(d) * a)
                for y in range(prover.nB):
                    vals = np.array([np.vdot(phi, bpow[y][l] @ phi) for l in range(d)])
                    table[x, y] += w * np.outer(phase, vals)
    return table


def _check_shapes(game: Game, prover):
    if isinstance(game, SatwapGame):
        shape, d = (2, 2), game.d
    else:
        shape, d = game.phi.shape, 2
    if (prover.nA, prover.nB) != shape:
        raise ValueError(f"prover answers {prover.nA}x{prover.nB} questions, game has {shape}")
    if isinstance(prover, HonestProver) and prover.d != d:
        raise ValueError(f"prover has {prover.d} outcomes, game needs {d}")
    if isinstance(prover, ClassicalProver) and isinstance(game, SatwapGame):
        raise ValueError("classical provers are implemented for binary games only")


def exact_compiled_bias(game: Game, prover: HonestProver, cfg: SecurityConfig | None = None):
    """Bias (or SATWAP value) of an honest prover from exact crypto-correlators.

    The honest prover ignores any leaked plaintext, so the result does not
    depend on ``cfg``.
    """
    _check_shapes(game, prover)
    table = crypto_correlators(prover)
    if isinstance(game, SatwapGame):
        return satwap_value(table, game)
    return float(np.sum(game.phi * table[:, :, 1, 1].real))


def exact_classical_score(fn: BellFunctional, prover: ClassicalProver, leakage_p: float) -> float:
    """Expected bias of a classical prover when each ciphertext leaks with ``leakage_p``."""
    _check_shapes(fn, prover)
    a = 1 - 2 * np.asarray(prover.alpha)
    b = 1 - 2 * np.asarray(prover.beta)
    hidden = float(a @ fn.phi @ b)
    if not prover.exploit_leaks:
        return hidden
    return (1 - leakage_p) * hidden + leakage_p * float(np.abs(fn.phi).sum())


def best_classical_prover(fn: BellFunctional, leakage_p: float = 0.0, max_tables=MAX_CLASSICAL_TABLES):
    """Enumerate all deterministic ``(alpha, beta)`` tables; return ``(score, prover)``."""
    nA, nB = fn.phi.shape
    if 2 ** (nA + nB) > max_tables:
        raise GuardExceeded(f"2^{nA + nB} classical provers exceed guard {max_tables}")
    best = None
    for ia in range(2**nA):
        alpha = [(ia >> i) & 1 for i in range(nA)]
        for ib in range(2**nB):
            beta = [(ib >> i) & 1 for i in range(nB)]
            prover = ClassicalProver(alpha, beta)
            score = exact_classical_score(fn, prover, leakage_p)
            if best is None or score > best[0]:
                best = (score, prover)
    return best


# -- Monte Carlo runs --------------------------------------------------------


@dataclass(frozen=True)
class Transcript:
    x: int
    nonce: int
    a: int
    y: int
    b: int
    score: float  # per-round estimator term
    win: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "ct_nonce": self.nonce,
            "a": self.a,
            "y": self.y,
            "b": self.b,
            "win": self.win,
        }


@dataclass(eq=False)
class CompiledRun:
    transcripts: list
    config: SecurityConfig
    seed: int
    scheme: str
    exact: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return len(self.transcripts)

    def estimate(self) -> tuple[float, float]:
        """Sampled bias (or Bell value) and its standard error."""
        s = np.array([t.score for t in self.transcripts])
        return float(s.mean()), float(s.std(ddof=1) / np.sqrt(s.size)) if s.size > 1 else np.inf

    def win_rate(self) -> Optional[tuple[float, float]]:
        wins = [t.win for t in self.transcripts]
        if any(w is None for w in wins):
            return None
        p = float(np.mean(wins))
        return p, float(np.sqrt(p * (1 - p) / len(wins)))

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(t.to_dict()) for t in self.transcripts)


class _HonestSampler:
    """Outcome distributions of an honest prover, cached per (x, branch, a, y)."""

    def __init__(self, prover: HonestProver):
        self.prover = prover
        d = prover.d
        self.bob_proj = [[prover.lift_bob(p) for p in projectors(b, d)] for b in prover.bob]
        self.cache = {}

    def first(self, x: int, branch: int):
        key = (x, branch)
        if key not in self.cache:
            states = post_measurement_states(self.prover, x, branch)
            probs = np.array([np.vdot(s, s).real for _, s in states])
            second = []
            for _, s in states:
                norm = np.vdot(s, s).real
                rows = []
                for projs in self.bob_proj:
                    if norm <= 1e-300:
                        rows.append(np.full(self.prover.d, 1 / self.prover.d))
                    else:
                        p = np.array([np.vdot(s, pr @ s).real for pr in projs]) / norm
                        rows.append(np.clip(p, 0, None) / np.clip(p, 0, None).sum())
                second.append(rows)
            self.cache[key] = (np.clip(probs, 0, None) / np.clip(probs, 0, None).sum(), second)
        return self.cache[key]


def _sample(rng, probs) -> int:
    return int(min(np.searchsorted(np.cumsum(probs), rng.random(), side="right"), len(probs) - 1))


def run_compiled(
    game: Game,
    prover: Union[HonestProver, ClassicalProver],
    cfg: SecurityConfig,
    rounds: int,
    seed: int,
    scheme: Scheme | None = None,
) -> CompiledRun:
    """Monte Carlo simulation of the compiled protocol.

    Round ``r`` draws all of its randomness from ``default_rng([seed, r])``,
    so runs are reproducible and rounds are independent of execution order.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    _check_shapes(game, prover)
    scheme = cfg.scheme() if scheme is None else scheme
    if isinstance(game, SatwapGame):
        q = np.full((2, 2), 0.25)
        value = game.value_tensor().real
        phi = predicate = None
    else:
        q = game.question_distribution()
        phi, predicate = game.phi, game.predicate()
    qflat = q.reshape(-1)
    nB = q.shape[1]
    sampler = _HonestSampler(prover) if isinstance(prover, HonestProver) else None

    transcripts = []
    for r in range(rounds):
        rng = np.random.default_rng([seed, r])
        key = scheme.gen(cfg.kappa, rng)
        idx = _sample(rng, qflat)
        x, y = divmod(idx, nB)
        ct = scheme.enc(key, x, rng)
        if sampler is not None:
            branches = prover.kraus[x]
            branch = _sample(rng, [w for w, _ in branches]) if len(branches) > 1 else 0
            pa, second = sampler.first(x, branch)
            a = _sample(rng, pa)
            ct_a = scheme.enc(key, a, rng)
            b = _sample(rng, second[a][y])
        else:
            a = prover.alpha[x]
            ct_a = scheme.enc(key, a, rng)
            leaked = ct.visible
            if prover.exploit_leaks and leaked is not None:
                b = a ^ int(predicate[leaked, y])
            else:
                b = prover.beta[y]
        a_dec = scheme.dec(key, ct_a)
        if phi is None:
            score, win = value[x, y, a_dec, b] / q[x, y], None
        else:
            win = bool((a_dec ^ b) == predicate[x, y])
            score = phi[x, y] * (1 - 2 * (a_dec ^ b)) / q[x, y]
        transcripts.append(Transcript(x, ct.nonce, a_dec, y, b, float(score), win))

    exact = crypto_correlators(prover) if sampler is not None else None
    return CompiledRun(transcripts, cfg, seed, scheme.name, exact)
