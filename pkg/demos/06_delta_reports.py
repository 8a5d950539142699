"""
Comparing measured scores against published results
====================================================

The package ships a table of published per-relation scores. A delta
report lines up fold-averaged measurements against that table and
prints signed differences, so a run summarizes as "how far above or
below the published number did we land".
"""

from kglp import MetricRow, delta_report, load_baseline
from kglp.metrics import render_delta_table

baseline = load_baseline()
print("relations in the bundled table:")
for name, cell in baseline.items():
    print(f"  {name:<22} F={cell['f_measure']:.2f}  AUC={cell['roc_auc']:.2f}")

# pretend we measured two relations, five folds each at dim 10
rows = []
for fold in range(5):
    rows.append(MetricRow("has-indication", 10, fold, 0.98 + 0.004 * fold, 0.999))
    rows.append(MetricRow("has-target", 10, fold, 0.90 + 0.01 * fold, 0.935))

deltas = delta_report(rows, baseline)
print()
print(render_delta_table(deltas))

# each row carries the raw numbers too
best = max(deltas, key=lambda d: d.delta_auc)
print(
    f"\nbiggest AUC gain: {best.relation} "
    f"({best.mean_auc:.3f} measured vs {best.baseline_auc:.3f} published)"
)
