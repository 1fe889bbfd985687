"""
Reliability as a history probability
====================================

The sensing process has two checkpoints: the spin must be transmitted
through the field region, then it must land in the half plane assigned to
it.  The failure histories ``F1``, ``F2`` and the survival history ``R2``
form a family whose weights are probabilities only if the family is
consistent.  Here the process is discretised on ``flag x spin x z`` and the
family is checked directly.
"""
import numpy as np

from qreliability import HistoryFamily, check_consistency, measurement_pipeline
from qreliability.model import ModelParams
from qreliability.oracle import discretize_pipeline

# a two-level toy: rotate, check, rotate, check.  A failure at the first
# check can be undone by the second rotation, so F1 and F2 interfere and the
# weights are not probabilities.
c, s = np.cos(0.3), np.sin(0.3)
U = np.array([[c, -s], [s, c]])
E = np.diag([1.0, 0.0])
toy = HistoryFamily.reliability_family(np.array([1.0, 0.0]), [U, U], [E, E])
rep = check_consistency(toy)
print("toy weights:", {k: round(float(w), 6) for k, w in zip(toy.labels, rep.weights)})
print(f"max off-diagonal {rep.max_violation:.4f}, consistent: {rep.consistent}")

# the discretised sensing process
p = ModelParams(k0=10.0)
fam, info = discretize_pipeline(p, 512)
rep = check_consistency(fam)
print(f"\ndimension {fam.histories[0].dimension}, max off-diagonal {rep.max_violation:.1e}")
for label, w in zip(fam.labels, rep.weights):
    print(f"  W({label}) = {w:.10f}")
print(f"  sum        = {sum(rep.weights):.14f}")
print(f"closed-form R = {measurement_pipeline(p).R:.10f}")
