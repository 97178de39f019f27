"""Command-line entry point: ``compiledgames <command> ...``.

Every command prints one JSON report.  The numeric payload lives under
``seed``, ``tolerances``, ``results`` and ``verdicts`` and is reproducible
given the same inputs and seed; ``versions`` and ``wall_time_s`` are not.

Exit codes: 0 success, 2 input error, 3 guard exceeded, 4 solver did not
converge, 5 a verification verdict failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .compiled import (
    HonestProver,
    SecurityConfig,
    best_classical_prover,
    classical_as_kraus,
    exact_compiled_bias,
    leakage_of,
    make_scheme,
    run_compiled,
)
from .games import (
    GameFileError,
    GuardExceeded,
    MnxParams,
    bias_to_winprob,
    classical_bias,
    load_game,
    mnx_quantum_bound,
    random_violating_mnx,
)
from .pseudo import (
    build_moment_matrix,
    compiled_bound_report,
    sos_polynomials,
    sos_term_check,
)
from .quantum import (
    SX,
    SZ,
    QuantumStrategy,
    StateVector,
    alice_from_bob,
    bias_of_strategy,
    chsh_optimal_strategy,
    elegant_optimal_strategy,
    mnx_optimal_strategy,
    random_binary_observable,
    random_generalized_observable,
)
from .satwap import (
    MAX_ENUMERATION_D,
    SatwapGame,
    correlator_table,
    satwap_bounds,
    satwap_classical_enumeration,
    satwap_optimal_strategy,
    satwap_sos_residual,
    satwap_value,
    zd_td,
)
from .sdp import NotConverged, solve_xor_sdp, vector_strategy_oracle
from .selftest import (
    elegant_rigorous_bound,
    elegant_selftest,
    mnx_selftest,
    satwap_selftest_residuals,
)
from .sos import bob_poly_psd_defect, build_sos, ostrev_vectors, verify_sos_identity

log = logging.getLogger("compiledgames")

EXIT_OK, EXIT_INPUT, EXIT_GUARD, EXIT_NOCONV, EXIT_VERIFY = 0, 2, 3, 4, 5

SWEEP_ANGLES = (0.0, 0.01, 0.05, 0.1, 0.2, 0.3)


class InputError(ValueError):
    pass


# -- report plumbing ----------------------------------------------------------


def jsonable(obj):
    """Recursively convert numpy and complex values into JSON types.

    Complex numbers become ``[re, im]`` pairs unless the imaginary part is
    float noise (``<= 1e-14 max(1, |re|)``), in which case only ``re`` is kept.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        if abs(z.imag) <= 1e-14 * max(1.0, abs(z.real)):
            return float(z.real)
        return [float(z.real), float(z.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _digest(args: argparse.Namespace) -> str:
    h = hashlib.sha256()
    game = getattr(args, "game", None)
    if game is not None:
        path = Path(game)
        h.update(path.read_bytes() if path.exists() else game.encode())
    for key in sorted(vars(args)):
        if key not in ("func", "out", "transcripts"):
            h.update(f"{key}={getattr(args, key)!r};".encode())
    return h.hexdigest()


def numeric_payload(report: dict) -> dict:
    """The part of a report that must be identical across reruns."""
    return {k: report[k] for k in ("seed", "tolerances", "results", "verdicts")}


def make_report(command, args, tolerances, results, verdicts, started) -> dict:
    return jsonable(
        {
            "command": command,
            "argv": sys.argv[1:],
            "inputs_digest": _digest(args),
            "seed": getattr(args, "seed", None),
            "tolerances": tolerances,
            "results": results,
            "verdicts": verdicts,
            "versions": {
                "compiledgames": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "wall_time_s": time.perf_counter() - started,
        }
    )


def _load(args):
    return load_game(args.game)


# -- commands --------------------------------------------------------------------


def cmd_bound(args):
    spec = _load(args)
    methods = ["sdp", "brute", "oracle"] if args.method == "all" else [args.method]
    results, verdicts = {"game": spec.name}, {}
    if spec.kind == "satwap":
        classical, quantum = satwap_bounds(spec.d)
        results.update(classical_formula=classical, quantum=quantum)
        if "brute" in methods:
            enum = satwap_classical_enumeration(spec.d)
            results["classical_enumeration"] = enum
            verdicts["formula_matches_enumeration"] = abs(enum - classical) <= 1e-9
        return results, verdicts, {"tol": args.tol}
    fn = spec.functional
    results["normalization"] = fn.normalization
    if "sdp" in methods:
        sol = solve_xor_sdp(fn, tol=args.tol)
        results["sdp"] = {
            "bias": sol.dual_value,
            "primal": sol.primal_value,
            "gap": sol.gap,
            "iterations": sol.iterations,
        }
        verdicts["sdp_gap_within_tol"] = abs(sol.gap) <= args.tol
    if "brute" in methods:
        results["brute"] = {"bias": classical_bias(fn)}
    if "oracle" in methods:
        dim = fn.nA + fn.nB
        results["oracle"] = {
            "bias": vector_strategy_oracle(fn, dim, seed=args.seed),
            "dim": dim,
        }
    if fn.normalization == "game":
        for m in methods:
            results[m]["win_probability"] = bias_to_winprob(results[m]["bias"])
    if "sdp" in results and "oracle" in results:
        delta = results["sdp"]["bias"] - results["oracle"]["bias"]
        results["cross_check"] = {"sdp_minus_oracle": delta}
        verdicts["oracle_below_sdp"] = delta >= -1e-7
    if "sdp" in results and "brute" in results:
        results.setdefault("cross_check", {})["sdp_minus_brute"] = (
            results["sdp"]["bias"] - results["brute"]["bias"]
        )
        verdicts["classical_below_quantum"] = results["brute"]["bias"] <= results["sdp"]["bias"] + 1e-7
    return results, verdicts, {"tol": args.tol, "oracle_vs_sdp": 1e-7}


def cmd_sos(args):
    spec = _load(args)
    if spec.functional is None:
        raise InputError("sos certificates are built for correlation functionals; use `satwap`")
    fn = spec.functional
    sol = solve_xor_sdp(fn, tol=min(args.tol, 1e-9))
    cert = build_sos(fn, sol)
    ov = ostrev_vectors(fn, sol)
    rng = np.random.default_rng(args.seed)
    residuals, bob_eigs = [], []
    for _ in range(args.realizations):
        alice = [random_binary_observable(args.verify_dim, rng) for _ in range(fn.nA)]
        bob = [random_binary_observable(args.verify_dim, rng) for _ in range(fn.nB)]
        residuals.append(verify_sos_identity(cert, (alice, bob)))
        bob_eigs.append(bob_poly_psd_defect(cert, bob))
    defects = ov.relation_defects(fn, sol.lam)
    results = {
        "game": spec.name,
        "certificate": cert.to_dict(),
        "polynomials": [
            {"label": label, "weight": w, "poly": repr(p)} for label, w, p in sos_polynomials(cert)
        ],
        "identity_residual_max": max(residuals) if residuals else 0.0,
        "bob_poly_min_eig": min(bob_eigs) if bob_eigs else None,
        "ostrev": defects,
        "schur_defect": cert.schur_defect(),
        "realizations": args.realizations,
        "verify_dim": args.verify_dim,
    }
    verdicts = {
        "identity": results["identity_residual_max"] <= args.tol,
        "bob_poly_psd": not bob_eigs or min(bob_eigs) >= -args.tol,
        "ostrev": max(defects["uu"], defects["uv"]) <= 1e-10 and defects["vv_min_eig"] >= -1e-9,
        "schur": cert.schur_defect() >= -1e-9,
    }
    return results, verdicts, {"identity": args.tol, "ostrev": 1e-10, "schur": 1e-9}


def honest_strategy(spec) -> QuantumStrategy:
    """An optimal strategy for the game: from the catalog, or Alice fitted to a catalog Bob."""
    if spec.kind == "satwap":
        return satwap_optimal_strategy(spec.d)
    if spec.mnx is not None:
        return mnx_optimal_strategy(spec.mnx)
    fn = spec.functional
    target = solve_xor_sdp(fn).dual_value
    bobs = {2: chsh_optimal_strategy().bob, 3: elegant_optimal_strategy().bob}
    state = StateVector.max_entangled(2)
    if fn.nB in bobs:
        bob = list(bobs[fn.nB])
        try:
            s = QuantumStrategy(state, alice_from_bob(fn, bob), bob)
            if bias_of_strategy(fn, s) >= target - 1e-7:
                return s
        except ValueError:
            pass
    if abs(target) <= 1e-12:
        return QuantumStrategy(state, [SZ] * fn.nA, [SZ] * fn.nB)
    raise InputError(f"no optimal honest strategy is known for {spec.name!r}")


def cmd_compile(args):
    spec = _load(args)
    scheme = make_scheme(args.scheme)
    leak = leakage_of(scheme)
    cfg = SecurityConfig(kappa=args.kappa, leakage_p=leak, delta_qhe=args.delta)
    game = SatwapGame(spec.d) if spec.kind == "satwap" else spec.functional
    results = {"game": spec.name, "scheme": scheme.name, "leakage_p": leak, "prover": args.prover}
    if args.prover == "honest":
        prover = HonestProver.from_strategy(honest_strategy(spec))
        kraus_prover = prover
    else:
        if spec.kind == "satwap":
            raise InputError("classical provers are implemented for binary games only")
        score, prover = best_classical_prover(game, leak)
        results["classical_tables"] = {"alpha": list(prover.alpha), "beta": list(prover.beta)}
        results["exact_classical_score"] = score
        kraus_prover = classical_as_kraus(game, prover, leak)
    if args.exact:
        results["exact_bias"] = exact_compiled_bias(game, kraus_prover, cfg)
    if args.rounds > 0:
        run = run_compiled(game, prover, cfg, args.rounds, args.seed, scheme=scheme)
        mean, err = run.estimate()
        results["sampled"] = {"rounds": run.rounds, "estimate": mean, "stderr": err}
        wr = run.win_rate()
        if wr is not None:
            results["sampled"].update(win_rate=wr[0], win_rate_stderr=wr[1])
        if args.transcripts:
            Path(args.transcripts).write_text(run.to_jsonl() + "\n")
    m = build_moment_matrix(kraus_prover, game, cfg)
    results["moments"] = {"c_block": m.c_block, "s_block": m.s_block}
    if isinstance(game, SatwapGame):
        check = sos_term_check(game, m, delta=cfg.delta_qhe, tol=args.tol)
    else:
        check = sos_term_check(build_sos(game, solve_xor_sdp(game)), m, cfg.delta_qhe, args.tol)
    results["sos_terms"] = check.to_dict()
    results["bound"] = compiled_bound_report(game, m, cfg, tol=args.tol)
    verdicts = {"sos_terms_nonnegative": check.passed, "compiled_bound": results["bound"]["pass"]}
    return results, verdicts, {"tol": args.tol, "delta_qhe": cfg.delta_qhe}


def _rotate_b3(theta: float) -> HonestProver:
    s = elegant_optimal_strategy()
    b3 = np.cos(theta) * SZ + np.sin(theta) * SX
    return HonestProver.from_strategy(QuantumStrategy(s.state, s.alice, [s.bob[0], s.bob[1], b3]))


def _rotate_mnx(p: MnxParams, theta: float) -> HonestProver:
    s = mnx_optimal_strategy(p)
    ang = p.mu + theta
    b1 = np.cos(ang) * SX + np.sin(ang) * SZ
    return HonestProver.from_strategy(QuantumStrategy(s.state, s.alice, [s.bob[0], b1]))


def _perturb_satwap(d: int, theta: float) -> HonestProver:
    s = satwap_optimal_strategy(d)
    shift = np.roll(np.eye(d), 1, axis=0)
    w, v = np.linalg.eigh(shift + shift.T)
    rot = v @ np.diag(np.exp(1j * theta * w)) @ v.conj().T
    z, t = s.bob
    return HonestProver.from_strategy(
        QuantumStrategy(s.state, s.alice, [z, rot @ t @ rot.conj().T], d=d)
    )


def _mnx_params(args) -> MnxParams:
    given = [v is not None for v in (args.mu, args.nu, args.chi)]
    if all(given):
        return MnxParams(args.mu, args.nu, args.chi)
    if any(given):
        raise InputError("give all of --mu, --nu, --chi or none of them")
    return random_violating_mnx(np.random.default_rng(args.seed))


def cmd_selftest(args):
    if args.delta < 0:
        raise InputError("--delta must be >= 0")
    fam = args.family
    if fam == "mnx":
        p = _mnx_params(args)
        if not p.violating or mnx_quantum_bound(p) < 1e-9:
            raise InputError(f"{p} is not a violating triple with a nonzero quantum bound")
        run = lambda th: mnx_selftest(_rotate_mnx(p, th), p, args.delta)
        extra = {"params": {"mu": p.mu, "nu": p.nu, "chi": p.chi}}
    elif fam == "elegant":
        run = lambda th: elegant_selftest(_rotate_b3(th), args.delta)
        extra = {}
    else:
        d = args.d
        if d > 8:
            raise GuardExceeded("satwap self-test residuals are limited to d <= 8")
        run = lambda th: satwap_selftest_residuals(_perturb_satwap(d, th), d)
        extra = {"d": d}
    report = run(args.theta).to_dict()
    results = {"family": fam, "theta": args.theta, **extra, "report": report}
    verdicts = {"pass": report["pass"]}
    if args.eps_sweep:
        rows = []
        for th in SWEEP_ANGLES:
            r = run(th)
            row = {"theta": th, "eps": r.eps, "residuals": r.residuals, "bounds": r.bounds, "pass": r.passed}
            if fam == "elegant":
                row["rigorous_bound"] = elegant_rigorous_bound(r.eps, args.delta)
            rows.append(row)
        results["sweep"] = rows
        verdicts["sweep_pass"] = None if fam == "satwap" else all(r["pass"] for r in rows)
    return results, verdicts, {"pass_slack": 1e-12, "delta": args.delta}


def cmd_satwap(args):
    d = args.d
    g = SatwapGame(d)
    s = satwap_optimal_strategy(d)
    classical, quantum = satwap_bounds(d)
    value = satwap_value(correlator_table(s), g)
    rng = np.random.default_rng(args.seed)
    rand_res = []
    for _ in range(args.realizations):
        alice = [random_generalized_observable(d, d, rng) for _ in range(2)]
        bob = [random_generalized_observable(d, d, rng) for _ in range(2)]
        rand_res.append(
            satwap_sos_residual(d, QuantumStrategy(StateVector.max_entangled(d), alice, bob, d=d))
        )
    Z, T = zd_td(d)
    eye = np.eye(d)
    defects = {
        name: {
            "unitarity": float(np.abs(m @ m.conj().T - eye).max()),
            "dth_power": float(np.abs(np.linalg.matrix_power(m, d) - eye).max()),
        }
        for name, m in (("Z", Z), ("T", T))
    }
    st = satwap_selftest_residuals(HonestProver.from_strategy(s), d) if d <= 8 else None
    results = {
        "d": d,
        "classical_formula": classical,
        "quantum_bound": quantum,
        "achieved": value,
        "sos_residual_optimal": satwap_sos_residual(d, s),
        "sos_residual_random_max": max(rand_res) if rand_res else 0.0,
        "observable_defects": defects,
        "compiled_exact": exact_compiled_bias(g, HonestProver.from_strategy(s)),
    }
    verdicts = {
        "achieves_quantum_bound": abs(value - quantum) <= 1e-6,
        "sos_identity": max([results["sos_residual_optimal"], *rand_res]) <= args.tol,
        "observables": max(max(v.values()) for v in defects.values()) <= 1e-8,
    }
    if d <= MAX_ENUMERATION_D:
        enum = satwap_classical_enumeration(d)
        results["classical_enumeration"] = enum
        verdicts["formula_matches_enumeration"] = abs(enum - classical) <= 1e-9
    if st is not None:
        results["selftest_residuals"] = st.residuals
        verdicts["selftest_residuals"] = max(st.residuals.values()) <= args.tol
    return results, verdicts, {"tol": args.tol, "value": 1e-6, "enumeration": 1e-9}


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="compiledgames", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, tol=1e-8, seed=True):
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--tol", type=float, default=tol)
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bound", help="classical and quantum bounds of a game")
    p.add_argument("--game", required=True, help="game file or catalog name")
    p.add_argument("--method", choices=["sdp", "brute", "oracle", "all"], default="all")
    common(p, tol=1e-9)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sos", help="build and verify the sum-of-squares certificate")
    p.add_argument("--game", required=True)
    p.add_argument("--verify-dim", type=int, default=4)
    p.add_argument("--realizations", type=int, default=5)
    common(p)
    p.set_defaults(func=cmd_sos)

    p = sub.add_parser("compile", help="simulate the compiled single-prover protocol")
    p.add_argument("--game", required=True)
    p.add_argument("--scheme", default="pad", help="transparent, pad or leaky:P")
    p.add_argument("--prover", choices=["honest", "classical"], default="honest")
    p.add_argument("--rounds", type=int, default=10_000)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--delta", type=float, default=0.0, help="QHE slack delta")
    p.add_argument("--kappa", type=int, default=128)
    p.add_argument("--transcripts", help="write line-delimited transcripts here")
    common(p, tol=1e-8)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("selftest", help="self-testing residuals and robust bounds")
    p.add_argument("--family", choices=["elegant", "mnx", "satwap"], required=True)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--chi", type=float)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--theta", type=float, default=0.0, help="perturbation angle of the prover")
    p.add_argument("--eps-sweep", action="store_true")
    p.add_argument("--delta", type=float, default=0.0)
    common(p)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("satwap", help="the d-outcome SATWAP inequality end to end")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--realizations", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_satwap)
    return ap


def run(argv=None) -> tuple[int, dict | None]:
    """Parse ``argv``, execute, and return ``(exit code, report)``."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_INPUT if exc.code else EXIT_OK), None
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    started = time.perf_counter()
    try:
        results, verdicts, tols = args.func(args)
    except GuardExceeded as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD, None
    except NotConverged as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NOCONV, None
    except (GameFileError, InputError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    report = make_report(args.command, args, tols, results, verdicts, started)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    failed = [k for k, v in report["verdicts"].items() if v is False]
    return (EXIT_VERIFY if failed else EXIT_OK), report


def main(argv=None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
