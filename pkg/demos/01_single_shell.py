"""A single shell decaying into its double and the condensate.

When the double of the only occupied radius lies beyond r_max, the shell
obeys g' = -2 g**2, so g(t) = g0 / (1 + 2 g0 t).  This script compares the
two time steppers against that formula and shows the RK4 error ladder.
"""

from wavelattice.config import ModelConfig
from wavelattice.integrator import StepControl, step_patankar, step_rk4
from wavelattice.lattice import canonical
from wavelattice.state import FullState, ShellState

one = canonical(3, 1, 0)
cfg = ModelConfig(r_max=(1, 0), rho_max=0, n_dir=1)
g0, T = 1.0, 1.0
exact = g0 / (1 + 2 * g0 * T)
ctl = StepControl()

print(f"exact g(T) = {exact:.12f}")
print(f"{'steps':>6} {'rk4 error':>12} {'patankar error':>15}")
for n in (10, 20, 40, 80, 160):
    rk = pk = FullState.from_directions([ShellState({one: g0})], cfg)
    for _ in range(n):
        rk = step_rk4(rk, ctl, T / n)
        pk = step_patankar(pk, ctl, T / n)
    g_rk = rk.direction(0).shells[one]
    g_pk = pk.direction(0).shells[one]
    print(f"{n:6d} {abs(g_rk - exact):12.3e} {abs(g_pk - exact):15.3e}")

print("\nRK4 errors shrink ~16x per halving, the Patankar step ~2x.")
print(f"mass routed past r_max: {rk.overflow_mass[0]:.6f}, condensate: {rk.condensate[0]:.6f}")
