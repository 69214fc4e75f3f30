"""Two qubits, cos(phi)|00> + sin(phi)|11>: free SU(2) settings against the QFT family.

For d = 2 the Bell expression is CHSH, so the freely optimized value should
follow the closed-form CHSH maximum 2 sqrt(1 + sin^2(2 phi)).  The QFT-restricted
optimum can only sit at or below it.

    python3 demos/chsh_vs_qft.py
"""
import math

from sudbell.cli import pure2_state
from sudbell.optimizer import maximize_qft, multistart_maximize


def chsh_max(phi):
    return 2 * math.sqrt(1 + math.sin(2 * phi) ** 2)


print(f"{'phi':>5} {'SU(2)':>9} {'formula':>9} {'QFT':>9}")
for k in range(1, 9):
    phi = k * math.pi / 32
    state = pure2_state(phi)
    su2 = multistart_maximize(state, n_restarts=4, seed=0).value
    qft = maximize_qft(state).value
    print(f"{phi:5.3f} {su2:9.5f} {chsh_max(phi):9.5f} {qft:9.5f}")
