"""
A BRC model that is not positive-definite on the sphere
=======================================================

Three sites 0.1 degree apart along the 60N parallel, each observed at three
environmental values, give nine samples. The BRC model with alpha2 = 1.01
looks harmless on them, yet its Gram matrix has a negative eigenvalue.
"""
import numpy as np

from covlab import brc, gram_matrix, grid_312, min_eigenvalue

model = brc(1.01, alpha_g=1 / 300, alpha_e=1 / 300)

# The geodesic lag can be measured in radians or degrees. Both are run.
for unit in ("radians", "degrees"):
    M = gram_matrix(model, grid_312(unit))
    print(f"{unit:8s} lambda_min = {min_eigenvalue(M):.6g}")

# Measuring arcs in kilometres on a 6371 km Earth is the same as scaling
# alpha_g by the radius.
M = gram_matrix(model.with_params(alpha_g=6371 / 300), grid_312("radians"))
print(f"km       lambda_min = {min_eigenvalue(M):.6g}")

# The matrix is nearly all ones, which is why the defect is tiny.
print("largest off-diagonal deviation from 1:", np.max(np.abs(M - 1)))
