"""Exact constants behind the Aubin-Yau dual forms and the Mabuchi weights.

Everything here is rational arithmetic; residuals are exact zeros, not small floats.
"""
from hermitian_energy import exact

for n in (3, 4, 5):
    c = exact.ay_constants(n)
    res = exact.ay_residuals(n, c)
    print(f"n={n}")
    print("  constants:", {k: str(v) for k, v in c.items()})
    print("  all residuals exactly zero:", all(v == 0 for v in res.values()))
    print("  matches closed forms:", c == exact.ay_closed_forms(n))
    print("  weights:", [str(a) for a in exact.mabuchi_weights(n)])

# the c_i recursion in closed form, and the choice of c_2 that kills the last coefficient
n = 6
c2 = exact.c2_solution(n)
print(f"\nn={n}: c2 =", c2.to_json())
for i in range(2, n):
    print(f"  c_{i} =", exact.closed_form(n, i).to_json())
print("  c_{n-1} after substitution is zero:", exact.substitute_c2(exact.closed_form(n, n - 1), c2).is_zero())
