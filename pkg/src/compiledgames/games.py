"""Two-player correlation Bell functionals, XOR games and their classical values.

A :class:`BellFunctional` stores the game matrix ``phi`` (rows indexed by
Alice's question, columns by Bob's).  The bias of a strategy with
correlators ``c[x, y]`` is ``sum(phi * c)``.  For an XOR game built from a
question distribution ``q`` and predicate ``f`` the entries are
``q[x, y] * (-1) ** f[x, y]`` and the winning probability is ``(1 + bias) / 2``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

#: Largest ``nA + nB`` accepted by :func:`classical_bias`.
MAX_SIGN_ENUMERATION = 24
#: Largest ``d ** nA * d ** nB`` accepted by :func:`classical_score_d`.
MAX_DOUTCOME_ENUMERATION = 10**8


class GuardExceeded(ValueError):
    """Raised when a brute-force enumeration would exceed its configured size."""


@dataclass(frozen=True, eq=False)
class BellFunctional:
    """Correlation functional ``sum_xy phi[x, y] <A_x B_y>``.

    ``normalization`` is ``"game"`` when the matrix came from a distribution
    and predicate (then ``q`` and ``f`` are kept), ``"raw"`` otherwise.
    """

    name: str
    phi: np.ndarray
    normalization: str = "raw"
    q: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 2 or min(phi.shape) < 1:
            raise ValueError(f"phi must be a non-empty matrix, got shape {phi.shape}")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi has non-finite entries")
        if self.normalization not in ("game", "raw"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        for name in ("q", "f"):
            value = getattr(self, name)
            if value is not None:
                value = np.array(value, dtype=float if name == "q" else int)
                value.setflags(write=False)
                object.__setattr__(self, name, value)

    @property
    def nA(self) -> int:
        return self.phi.shape[0]

    @property
    def nB(self) -> int:
        return self.phi.shape[1]

    def scaled(self, c: float) -> "BellFunctional":
        return BellFunctional(f"{self.name}*{c:g}", c * self.phi, "raw")

    def permuted(self, rows, cols) -> "BellFunctional":
        return BellFunctional(self.name, self.phi[np.ix_(rows, cols)], "raw")

    def predicate(self) -> np.ndarray:
        """XOR predicate ``f[x, y]``: players win iff ``a ^ b == f[x, y]``."""
        if self.f is not None:
            return np.array(self.f)
        return (self.phi < 0).astype(int)

    def question_distribution(self) -> np.ndarray:
        """Distribution the verifier samples questions from (``q`` or uniform)."""
        if self.q is not None:
            return np.array(self.q)
        return np.full(self.phi.shape, 1.0 / self.phi.size)


def functional_from_game(q, f, name: str = "xor") -> BellFunctional:
    """Game matrix ``phi[x, y] = q[x, y] * (-1) ** f[x, y]`` of an XOR game."""
    q = np.asarray(q, dtype=float)
    f = np.asarray(f)
    if q.shape != f.shape:
        raise ValueError(f"q has shape {q.shape} but f has shape {f.shape}")
    if np.any(q < 0):
        raise ValueError("q has negative entries")
    if abs(q.sum() - 1.0) > 1e-12:
        raise ValueError(f"q sums to {q.sum()!r}, not 1")
    if not np.all((f == 0) | (f == 1)):
        raise ValueError("f must be a 0/1 matrix")
    f = f.astype(int)
    return BellFunctional(name, q * (-1.0) ** f, "game", q=q, f=f)


def classical_bias(fn: BellFunctional, max_size: int = MAX_SIGN_ENUMERATION) -> float:
    """Best bias over deterministic sign assignments ``a: X -> ±1``, ``b: Y -> ±1``.

    Alice's ``2**nA`` assignments are enumerated; for each, Bob's optimal reply
    ``b[y] = sign(sum_x phi[x, y] a[x])`` is taken in closed form, which
    gives the same maximum as enumerating all ``2**(nA + nB)`` pairs.
    """
    nA, nB = fn.phi.shape
    if nA + nB > max_size:
        raise GuardExceeded(f"nA + nB = {nA + nB} exceeds enumeration guard {max_size}")
    phi = fn.phi
    if nA > nB:
        phi = phi.T
        nA, nB = nB, nA
    signs = 1 - 2 * ((np.arange(2**nA)[:, None] >> np.arange(nA)) & 1)
    return float(np.abs(signs @ phi).sum(axis=1).max())


def classical_score_d(
    value: np.ndarray,
    max_size: int = MAX_DOUTCOME_ENUMERATION,
) -> float:
    """Best deterministic score of a d-outcome functional.

    ``value[x, y, a, b]`` is the (possibly complex) weight collected when the
    players answer ``a`` to ``x`` and ``b`` to ``y``; the score of a strategy
    is the real part of the sum.  Enumerates Alice's ``d**nA`` response
    functions and takes Bob's best reply per question.
    """
    value = np.asarray(value)
    nA, nB, dA, dB = value.shape
    if float(dA) ** nA * float(dB) ** nB > max_size:
        raise GuardExceeded(f"{dA}^{nA} * {dB}^{nB} strategies exceed guard {max_size}")
    real = value.real
    best = -np.inf
    for answers in np.ndindex(*(dA,) * nA):
        # per (y, b): sum over x of value[x, y, answers[x], b]
        gathered = real[np.arange(nA), :, list(answers), :].sum(axis=0)
        best = max(best, gathered.max(axis=1).sum())
    return float(best)


def bias_to_winprob(xi: float) -> float:
    """Winning probability ``(1 + xi) / 2`` of an XOR game with bias ``xi``."""
    if not -1.0 - 1e-12 <= xi <= 1.0 + 1e-12:
        warnings.warn(f"bias {xi!r} outside [-1, 1]; functional is probably unnormalized")
    return (1.0 + xi) / 2.0


@dataclass(frozen=True)
class MnxParams:
    """Angles of the two-input correlation family that self-tests any qubit pair."""

    mu: float
    nu: float
    chi: float

    @property
    def violating(self) -> bool:
        mu, nu, chi = self.mu, self.nu, self.chi
        return bool(np.cos(mu + chi) * np.cos(mu + nu) * np.cos(nu) * np.cos(chi) < 0)


def mnx_functional(p: MnxParams) -> BellFunctional:
    mu, nu, chi = p.mu, p.nu, p.chi
    cmn, cmc = np.cos(mu + nu), np.cos(mu + chi)
    phi = [
        [cmn * cmc * np.cos(chi), -np.cos(nu) * np.cos(chi) * cmc],
        [-cmn * cmc * np.cos(nu), np.cos(nu) * np.cos(chi) * cmn],
    ]
    return BellFunctional(f"mnx({mu:.6g},{nu:.6g},{chi:.6g})", phi, "raw")


def mnx_quantum_bound(p: MnxParams) -> float:
    return float(abs(np.sin(p.mu) * np.sin(p.chi - p.nu) * np.sin(p.mu + p.nu + p.chi)))


def random_violating_mnx(rng: np.random.Generator, margin: float = 0.05) -> MnxParams:
    """Rejection-sample a violating triple with ``|sin mu|`` bounded away from 0."""
    while True:
        mu, nu, chi = rng.uniform(margin, np.pi - margin), *rng.uniform(0, 2 * np.pi, 2)
        p = MnxParams(mu, nu, chi)
        prod = np.cos(mu + chi) * np.cos(mu + nu) * np.cos(nu) * np.cos(chi)
        if p.violating and prod < -margin**2 and mnx_quantum_bound(p) > margin:
            return p


# -- catalog ---------------------------------------------------------------

ELEGANT_SIGNS = np.array(
    [
        [1, 1, 1],
        [1, -1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
    ],
    dtype=float,
)


def chsh() -> BellFunctional:
    q = np.full((2, 2), 0.25)
    f = np.array([[0, 0], [0, 1]])
    return functional_from_game(q, f, name="chsh")


def elegant() -> BellFunctional:
    """Elegant Bell functional with unit weights (classical 6, quantum 4*sqrt(3))."""
    return BellFunctional("elegant", ELEGANT_SIGNS, "raw")


def elegant_game() -> BellFunctional:
    """The elegant functional as a normalized XOR game (uniform over 4x3)."""
    return functional_from_game(
        np.full((4, 3), 1 / 12), (ELEGANT_SIGNS < 0).astype(int), name="elegant-game"
    )


CATALOG: dict[str, Callable[[], BellFunctional]] = {
    "chsh": chsh,
    "elegant": elegant,
    "elegant-game": elegant_game,
}


# -- game files ------------------------------------------------------------


@dataclass(frozen=True)
class GameSpec:
    """Parsed game file: either a correlation functional or a SATWAP game."""

    name: str
    kind: str
    functional: Optional[BellFunctional] = None
    d: Optional[int] = None
    mnx: Optional[MnxParams] = None
    raw: dict = field(default_factory=dict, compare=False)


class GameFileError(ValueError):
    pass


def parse_game(data: dict) -> GameSpec:
    if not isinstance(data, dict):
        raise GameFileError("game file must hold a JSON object")
    name = data.get("name", "unnamed")
    kind = data.get("kind")
    if kind not in ("xor", "functional", "satwap", "mnx"):
        raise GameFileError(f"kind must be xor, functional, satwap or mnx, got {kind!r}")
    if kind == "mnx":
        try:
            p = MnxParams(*(float(data[k]) for k in ("mu", "nu", "chi")))
        except (KeyError, TypeError, ValueError) as exc:
            raise GameFileError("mnx games need real angles mu, nu and chi") from exc
        fn = mnx_functional(p)
        return GameSpec(data.get("name", fn.name), kind, functional=fn, mnx=p, raw=data)
    if kind == "satwap":
        d = data.get("d")
        if not isinstance(d, int) or d < 2:
            raise GameFileError("satwap games need an integer d >= 2")
        return GameSpec(name, kind, d=d, raw=data)
    has_qf = "q" in data or "f" in data
    has_phi = "phi" in data
    if has_qf == has_phi:
        raise GameFileError("give exactly one of (q, f) or phi")
    try:
        if has_qf:
            if "q" not in data or "f" not in data:
                raise GameFileError("q and f must be given together")
            fn = functional_from_game(data["q"], data["f"], name=name)
        else:
            fn = BellFunctional(name, data["phi"], "raw")
    except GameFileError:
        raise
    except (ValueError, TypeError) as exc:
        raise GameFileError(str(exc)) from exc
    return GameSpec(name, kind, functional=fn, raw=data)


def load_game(path) -> GameSpec:
    """Read a game file, or a catalog name (``chsh``, ``elegant``, ...)."""
    path = Path(path)
    if not path.exists() and str(path) in CATALOG:
        fn = CATALOG[str(path)]()
        return GameSpec(fn.name, "functional", functional=fn)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GameFileError(f"cannot read {path}: {exc}") from exc
    return parse_game(data)


def game_to_dict(fn: BellFunctional) -> dict:
    if fn.q is not None:
        return {"name": fn.name, "kind": "xor", "q": fn.q.tolist(), "f": fn.f.tolist()}
    return {"name": fn.name, "kind": "functional", "phi": fn.phi.tolist()}
