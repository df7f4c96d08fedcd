"""Basic isometries on the original Bourgain-Delbaen space and their separation.

Builds the a = 1, b = 1/3 space to rank 5 (about 1300 elements, a few seconds).
Run with ``python3 demos/original_separation.py``.
"""

from bdspaces import original as orig
from bdspaces.linalg import Q, format_rational

p = orig.OrigParams(Q(1), Q("1/3"))
print("lambda =", format_rational(p.lam))
print("|Gamma_n| for n <= 6:", orig.gamma_sizes(6))

# %% Build and cross-check the two constructions of the extension maps.
sp = orig.build_original(p, 5)
print("cross-check ok:", orig.cross_check(p, sp).ok)
bounds = orig.bounds_report(p, sp, 5)
print("max basis projection norm:", format_rational(bounds.get("basis-projections").witness["max_norm"]))

# %% Two basic operators built on canonical bases of rank 2 and 3.
bases = orig.canonical_bases(sp, [2, 3])
ops = {n: orig.basic_operator(sp, bases[n]) for n in bases}
for n, op in ops.items():
    print(f"S_{n} is a verified isometry:", orig.verify_basic_operator(sp, op, 5).ok)

# %% They stay a fixed distance apart, witnessed by a single d-vector.
w = orig.separation(sp, ops[3], ops[2], p.lam)
print("separation lower bound:", format_rational(w["value"]), "with ||d*|| =", w["dstar_norm"])
