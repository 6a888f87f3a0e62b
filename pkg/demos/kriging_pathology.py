"""
Negative kriging variances from an invalid model
================================================

A clustered synthetic layout in a 1000 km box is kriged onto a 50 x 50
grid twice: with the exponential model that generated it, then with a
triangle model, which is valid on the line only.
"""
import warnings

from covlab import FieldData, exponential, grid_targets, simple_krige, triangle
from covlab.io import synth_generate

table = synth_generate(100, 1000.0, exponential(1 / 200), seed=0)
data = FieldData(table.config(), table.values)
targets = grid_targets((0, 1000), (0, 1000), 50, 50)

good = simple_krige(exponential(1 / 200), data, targets)
print(f"exponential: variances in [{good.variances.min():.4f}, {good.variances.max():.4f}]")

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    bad = simple_krige(triangle(1 / 300), data, targets)
print(f"triangle: {bad.n_negative} negative variances, min {bad.variances.min():.3f}")
for w in caught:
    print("warning:", w.message)
