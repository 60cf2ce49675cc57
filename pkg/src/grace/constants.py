"""Physical constants (SI)."""
import math

MU0 = 4e-7 * math.pi
# gamma * mu0 as used by OOMMF-comparable solvers, m/(A s)
GAMMA0 = 2.211e5
# gyromagnetic ratio in rad/(s T); the LLG right-hand side multiplies it by mu0*H
GAMMA = GAMMA0 / MU0
