"""Reference values frozen from closed forms (see test_oracles.py for the
independent recomputation)."""

# top Lyapunov exponent of [[3, -1], [1, 0]]: log of its larger eigenvalue
L_FREE_3 = 0.9624236501192069
# m(E = 3) for the free model: root of m^2 + 3m + 1 = 0 inside the unit disc
M_FREE_3 = -0.3819660112501051
S_MINUS_FREE_3 = 0.3819660112501051
S_PLUS_FREE_3 = 2.618033988749895
G_FREE_3 = -0.4472135954999579
GAP_FREE_3 = 2.23606797749979
DERIV_FREE_3 = 0.14589803375031546
# Herglotz root of m^2 + 2i m + 1 = 0
M_FREE_2I = 0.41421356237309503j
LOG_2 = 0.6931471805599453
