"""Score adversarial-ML techniques with the severity model.

Every catalog technique lists the access and knowledge an attacker must
hold, the impacts it can achieve and its performance class.  The score
combines those through the weight model: requirements and deployment guards
cost severity, impacts and performance add to it.
"""

from mlrisk.ahp import WeightModel
from mlrisk.cmlvss import EnvironmentProfile, load_catalog, severity

catalog = load_catalog()
weights = WeightModel.defaults()

print(f"{'id':5} {'severity':>8}  technique")
ranked = sorted(
    ((severity(p, weights).value, tid) for tid, p in catalog.items()), reverse=True
)
for value, tid in ranked:
    print(f"{tid:5} {value:8.2f}  {catalog[tid].name}")

# Black-box techniques with minimal demands rank highest; poisoning ranks
# low because writing into the training set is expensive to obtain.
print()
at3, at1 = catalog["AT3"], catalog["AT1"]
print(f"decision-based evasion {severity(at3, weights).value:.2f} "
      f"> white-box evasion {severity(at1, weights).value:.2f} "
      "(perfect knowledge costs more than query access)")

# Deployment guards lower severity: the same poisoning technique against a
# pipeline that A/B-tests candidate models is harder to land.
naive = EnvironmentProfile()
guarded = EnvironmentProfile(data_validation=True, ab_testing=True)
at7 = catalog["AT7"]
print(f"\nblack-box poisoning: naive pipeline {severity(at7, weights, naive).value:.2f}, "
      f"with data validation + A/B testing {severity(at7, weights, guarded).value:.2f}")

score = severity(at7, weights, guarded)
print("\ncomponent breakdown (weighted, pre-scaling):")
for name, value in sorted(score.components.items()):
    print(f"  {name:20} {value:+.4f}")
