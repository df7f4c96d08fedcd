"""A toy nilpotent-Calkin space: operator tables, evaluation analysis and witnesses.

Uses small toy sequences m, n so that rank 6 builds in well under a second.
Run with ``python3 demos/ah_calkin.py``.
"""

from bdspaces import ah
from bdspaces.linalg import format_rational

net = ah.NetSpec(denominator_bound=2, support_cap=2, mode="sampled", seed=0, count=4)
params = ah.AHParams(3, (4, 5, 6, 17, 18, 19, 20, 21), (2, 3, 4, 5, 6, 7, 8, 9), True, 6, net)
print("growth assumptions violated (expected in toy mode):", len(ah.assumption_violations(params.m_seq, params.n_seq)))

space = ah.build_ah_space(params)
print("elements:", len(space))

# %% The shift-like operator R* sends e*_g to e*_G(g) (or 0); its cube vanishes.
print("operator table:", ah.check_operator_table(space).ok)
print("nilpotency:", ah.check_nilpotency(space).ok)
print("commutation:", ah.check_commutation(space).ok)

# %% Evaluation analysis of an age-2 element.
g = next(g for g in range(len(space)) if space.age[g] == 2)
an = ah.evaluation_analysis(space, g)
print(f"element {g}: age {len(an.chain)}, identities hold:", all(ah.analysis_identities(space, g).values()))

# %% Calkin witnesses for lambda = (1, 1/2, 1/4).
rep = ah.calkin_witnesses(space, [1, "1/2", "1/4"])
for c in rep.checks:
    print(f"{c.status:11s} {c.id}")
