"""The two fallback stages: nearest training instances, then genetic search.

Stage order is always exact enumeration -> NICE -> MOC. This script forces
each fallback in turn: first a query whose binary space is too large to
enumerate (NICE answers from the training pool), then a query whose
restricted pool is empty (MOC evolves synthetic variants), with the
per-generation trace printed.
"""

import numpy as np

from whatif.cf_core import CfQuery
from whatif.cf_moc import MocConfig, moc_search
from whatif.cohort import CohortConfig, build_dataset, generate_cohort
from whatif.gbm import GbmConfig, train
from whatif.hybrid import generate

timelines, labels = generate_cohort(CohortConfig(n=1500, seed=5, planted={"HTN": 2.0, "CKD": 1.2}))
dataset = build_dataset(timelines, labels)
schema = dataset.schema
model = train(dataset, GbmConfig(n_trees=120, seed=5))
risks = model.predict_proba(dataset.rows)[:, 1]
row_id = int(np.argmax(risks))
x0 = dataset.rows[row_id]

# --- NICE: cap m_max below the binary count so enumeration is skipped
query = CfQuery(x0=x0, target_class=1, p_min=0.0, p_max=0.4, k=3, m_max=4, seed=5)
report = generate(query, model, dataset)
print(f"m={report.m} binary actionable > m_max=4, so enumeration is skipped")
print(f"Stage used: {report.stage_used}")
for cf in report.counterfactuals:
    print(f"  nearest valid training row at Gower distance {cf.distance:.4f}, "
          f"risk {report.p_origin:.1%} -> {cf.p_target:.1%}, {len(cf.changed)} features differ")

# --- MOC: fix a numeric feature at a value no training row matches
age_j = schema.index_of("age")
x0_odd = tuple(987.5 if j == age_j else v for j, v in enumerate(x0))
# age 987.5 matches nobody, so the restricted pool is empty
query = CfQuery(
    x0=x0_odd, target_class=1, p_min=0.0, p_max=0.4,
    fixed=frozenset({age_j}), k=3, m_max=0, seed=5,
)
print("\nRestricted pool is empty (no training row shares the fixed age), MOC takes over:")
trace = []
cfs = moc_search(
    query, model, schema,
    MocConfig(population=40, generations=60),
    on_generation=lambda gen, gap, front: trace.append((gen, gap, front)),
)
for gen, gap, front in trace[::12] + [trace[-1]]:
    print(f"  generation {gen:>2}: best band gap {gap:.4f}, first front size {front}")
print(f"MOC returned {len(cfs)} validated counterfactuals:")
for cf in cfs:
    changed = ", ".join(schema[j].name for j in sorted(cf.changed))
    print(f"  risk -> {cf.p_target:.1%} (distance {cf.distance:.4f}) changing {changed}")
