"""Admissible exponent pairs for the regularity criteria.

check_pairs uses exact rational arithmetic, so boundary cases such as
2/p + 3/q = 1 are decided without rounding.  The same table is exposed on the
command line as `chemns check-criteria`.

Run: python3 demos/05_criteria.py
"""

from chemns import CriterionSpec, TheoremOutOfRange, bootstrap_exponent, check_pairs

INF = float("inf")
cases = [
    ("ps", ((2, INF), (INF, 4)), 1.0),
    ("ps", ((4, 6), (8, 6)), 1.25),
    ("ps", ((2, 3), (INF, 2)), 1.25),
    ("bv", ((2, INF), (2, 3)), 1.0),
    ("bv", ((INF, 4), (4, 1.5)), 2.0),
]
for kind, pairs, alpha in cases:
    verdicts = check_pairs(CriterionSpec(kind, pairs, alpha))
    text = "; ".join("ok" if v.admissible else f"fails {v.violated}" for v in verdicts)
    print(f"{kind} alpha={alpha:<5} {pairs}: {text}")

try:
    check_pairs(CriterionSpec("ps", ((2, INF), (INF, 4)), 0.7))
except TheoremOutOfRange as exc:
    print("alpha=0.7:", exc)

for alpha in (1.0, 1.25, 2.0):
    print(f"bootstrap exponent at alpha={alpha}: {bootstrap_exponent(alpha):.4f}")
