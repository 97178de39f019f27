"""
What a leaky encryption scheme gives away
=========================================

A classical prover cannot beat the classical bound when the first question is
hidden.  Here the ciphertext reveals ``x`` with probability ``p``; the best
classical prover then answers the second question to win, and the positivity
of the pseudo-expectation fails once ``p`` is large enough.
"""

from compiledgames.compiled import SecurityConfig, best_classical_prover, classical_as_kraus
from compiledgames.games import chsh
from compiledgames.pseudo import build_moment_matrix, certificate_for, compiled_bound_report, sos_term_check

fn = chsh()
cert = certificate_for(fn)

print(f"{'p':>5} {'score':>8} {'min E[P^dag P]':>15} {'squares ok':>11} {'bound ok':>9}")
for p in (0.0, 0.1, 0.25, 0.5, 0.75, 1.0):
    score, prover = best_classical_prover(fn, p)
    m = build_moment_matrix(classical_as_kraus(fn, prover, p))
    check = sos_term_check(cert, m)
    report = compiled_bound_report(fn, m, SecurityConfig(leakage_p=p))
    worst = min(t.value for t in check.terms)
    print(f"{p:5.2f} {score:8.4f} {worst:15.4f} {str(check.passed):>11} {str(report['pass']):>9}")

###############################################################################
# The score grows linearly, ``(1 - p) 0.5 + p``.  It crosses the quantum bias
# ``sqrt(2)/2`` near ``p = 0.414``; the squares turn negative much earlier,
# which is the signal a sound verifier relies on.
