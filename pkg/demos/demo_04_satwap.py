"""
The d-outcome SATWAP inequality
===============================

For each ``d`` we print the classical bound, the quantum bound ``2(d - 1)``,
the value reached by maximally entangled qudits with Bob's ``Z_d`` and
``T_d``, the residual of the sum-of-squares identity, and the compiled value
of the same strategy.
"""

from compiledgames.compiled import HonestProver, exact_compiled_bias
from compiledgames.satwap import (
    SatwapGame,
    correlator_table,
    satwap_bounds,
    satwap_optimal_strategy,
    satwap_sos_residual,
    satwap_value,
)
from compiledgames.selftest import satwap_selftest_residuals

print(f"{'d':>2} {'classical':>10} {'quantum':>8} {'achieved':>10} {'sos res':>9} {'compiled':>9} {'self-test':>10}")
for d in range(2, 8):
    g = SatwapGame(d)
    s = satwap_optimal_strategy(d)
    classical, quantum = satwap_bounds(d)
    prover = HonestProver.from_strategy(s)
    st = satwap_selftest_residuals(prover, d)
    print(
        f"{d:2d} {classical:10.4f} {quantum:8.1f} {satwap_value(correlator_table(s), g):10.6f}"
        f" {satwap_sos_residual(d, s):9.1e} {exact_compiled_bias(g, prover):9.4f}"
        f" {max(st.residuals.values()):10.1e}"
    )
