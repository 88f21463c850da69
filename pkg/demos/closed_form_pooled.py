"""Closed-form estimation on a single 2x2 table.

The pooled table cross-classifies 6758 individuals by a binary exposure
and a binary outcome.  Among all populations of (propensity, baseline
prognosis, exposed prognosis) triples that reproduce the four observed
cell frequencies, the entropy-maximizing one turns out to be homogeneous:
every individual carries the same triple, and it has a closed form.
"""

from maxent_effects.closed_form import solve_homogeneous
from maxent_effects.datasets import marginal_table
from maxent_effects.model import joint_probs, odds_ratio

table = marginal_table()
(cat,) = table.categories
print(f"counts: n01={cat.n01:.0f} n11={cat.n11:.0f} "
      f"n00={cat.n00:.0f} n10={cat.n10:.0f} (N={cat.total:.0f})")

probs = joint_probs(table, 0)
solution = solve_homogeneous(probs)
t = solution.triple

print(f"propensity of exposure   pi = {t.pi:.6f}")
print(f"risk if unexposed        r0 = {t.r0:.6f}")
print(f"risk if exposed          r1 = {t.r1:.6f}")
print(f"entropy per individual      = {solution.entropy_per_individual:.6f} nats")

# the causal contrasts implied by the homogeneous solution
print(f"relative risk    r1/r0   = {solution.relative_risk:.2f}")
print(f"risk difference  r1 - r0 = {solution.risk_difference:.4f}")

# the odds ratio is what the raw table reports without any model; the
# maximum-entropy relative risk is considerably smaller
print(f"odds ratio (raw table)   = {odds_ratio(table.pooled()):.2f}")

# relabeling the exposure (swapping exposed and unexposed) mirrors the
# solution: pi -> 1-pi and the two prognoses trade places
swapped = solve_homogeneous(joint_probs(table.swap_exposure(), 0))
s = swapped.triple
print(f"after swapping labels: pi={s.pi:.6f} r0={s.r0:.6f} r1={s.r1:.6f}")
