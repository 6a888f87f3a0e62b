"""
Where (|eta| + |tau|)^alpha stops being a variogram
===================================================

The function is a variogram for alpha <= 1 and fails for larger exponents.
``neg_def_test`` looks for zero-sum weights with a positive quadratic form.
"""
from covlab.variograms import BRCExponent, CrossTerm, neg_def_test, schoenberg_search, subadditivity_check

for alpha in (0.5, 1.0, 1.1, 1.5, 2.0):
    res = neg_def_test(BRCExponent(alpha, spatial_dim=2), seed=0)
    print(f"alpha={alpha}: {'pass' if res.passed else 'fail'} after {res.trials} trials")

# %%
# A failing variogram also breaks exp(-r gamma) as a covariance.
res = schoenberg_search(BRCExponent(1.5, 2), rs=(0.5, 1.0, 2.0), seed=0)
print("Schoenberg witness:", res.witness["r"], res.witness["lambda_min"])

# %%
# Subadditivity of the square root fails for the mixed term |eta| |tau|
# but holds for the whole square, whose root is a norm.
print("mixed term:", subadditivity_check(CrossTerm(2)).passed)
print("full square:", subadditivity_check(BRCExponent(2.0, 2)).passed)
