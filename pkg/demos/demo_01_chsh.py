"""
CHSH from bounds to a compiled protocol
=======================================

The CHSH game asks two players for bits ``a, b`` with ``a XOR b = x AND y``.
We compute its classical and quantum bias, write down the sum-of-squares
certificate behind the quantum bound, and then play the game with a single
prover whose first question arrives encrypted.
"""

import numpy as np

from compiledgames.compiled import HonestProver, SecurityConfig, run_compiled
from compiledgames.games import bias_to_winprob, chsh, classical_bias
from compiledgames.pseudo import build_moment_matrix, certificate_for, sos_term_check
from compiledgames.quantum import chsh_optimal_strategy
from compiledgames.sdp import solve_xor_sdp

fn = chsh()
print("game matrix phi:\n", fn.phi)

###############################################################################
# Bounds
# ------
# The classical bias is a maximum over sign vectors; the quantum bias is the
# value of a small semidefinite program.

sol = solve_xor_sdp(fn)
print(f"classical bias {classical_bias(fn):.6f}  ->  win probability {bias_to_winprob(classical_bias(fn)):.6f}")
print(f"quantum bias   {sol.dual_value:.6f}  ->  win probability {bias_to_winprob(sol.dual_value):.6f}")
print(f"duality gap    {sol.gap:.2e}")

###############################################################################
# The certificate
# ---------------
# ``xi 1 - B`` is a weighted sum of squares ``(A_x - F[x] . B)^2`` plus a
# polynomial in Bob's observables that is PSD on binary observables.

cert = certificate_for(fn)
print("weights lambda_x / 2:", np.round(cert.lambda_a / 2, 6))
print("F:\n", np.round(cert.F, 6))

###############################################################################
# Compiled play
# -------------
# The honest prover measures its half of a maximally entangled pair.  Its
# exact compiled bias comes from the moment data; a Monte Carlo run samples
# transcripts with the keyed-pad scheme.

prover = HonestProver.from_strategy(chsh_optimal_strategy())
m = build_moment_matrix(prover)
check = sos_term_check(cert, m)
print("pseudo-expectations of the squares:", [f"{t.value:.1e}" for t in check.terms])

run = run_compiled(fn, prover, SecurityConfig(), rounds=20_000, seed=1)
win, err = run.win_rate()
print(f"sampled win rate {win:.4f} +- {err:.4f}   (cos^2(pi/8) = {np.cos(np.pi / 8) ** 2:.4f})")
