"""The equality-testing game: is the pair (rho, rho) or (rho, sigma)?

The swap test wins with probability 1/2 + ||rho - sigma||_2^2 / 8 whatever
unitary the adversary applies, and no measurement does better on average.
"""
from qembed.experiments import state_pair
from qembed.games import GameSpec, equality_game_analytic, equality_game_simulate, helstrom_bias
from qembed.sampling import RngStream

rho, sigma = state_pair("orthogonal-pure", 2)
for adversary in ("haar-U", "fixed-U"):
    res = equality_game_simulate(GameSpec(rho, sigma, 50_000, adversary), RngStream(1))
    print(f"{adversary}: success {res.success_rate:.4f} +- {res.std_error:.4f} (analytic {res.analytic_success})")

print("optimal-M analytic:", equality_game_analytic(rho, sigma, "optimal-M"))
print("Helstrom bias with the states in hand:", helstrom_bias(rho, sigma)[0])
