"""The shift-invariant space R_2, built exactly and checked step by step.

Run with ``python3 demos/r2_shift_space.py``.
"""

from bdspaces import shift
from bdspaces.linalg import format_rational

# %% Build up to rank 9 (256 basis elements).
sp = shift.build_r2(9)
print("elements:", len(sp))

# %% The first few evaluation functionals d*_n, as sparse combinations of e*.
for n in range(4):
    terms = ", ".join(f"{g}: {format_rational(v)}" for g, v in sorted(sp.dstar(n).items()))
    print(f"d*_{n} = {{{terms}}}")

# %% d_0 is the binary-digit-sum sequence y_0 = (2^-s(n)).
d = shift.DTable(sp)
print("d_0 prefix:", [format_rational(v) for v in d(0).coords[:8]])
print("equals y_0:", d(0).coords == shift.y0(sp.size(9)).coords)

# %% Each step of the shift argument, with its witness.
rep = shift.verify_steps(sp)
for c in rep.checks:
    print(f"{c.status:6s} {c.id}")
print("step 5 exceptions:", rep.get("step-5").witness["exceptions_confirmed"])

# %% The finite-rank isomorphism with c_0 and the size of its inverse.
cert = shift.c0_certificate(sp)
print("||T^-1|| =", format_rational(cert.get("inverse-bound").witness["norm_T_inverse"]))
