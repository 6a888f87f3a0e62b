"""
Looking up validity and hunting for counterexamples
===================================================

``validity_range`` returns the known verdict for a family on a domain.
``counterexample_search`` tries random configurations until a Gram matrix
certifies as not positive-definite.
"""
from covlab import DomainSpec, counterexample_search, stable, triangle, validity_range

R2 = DomainSpec("euclidean", 2)
S2 = DomainSpec("sphere", 3)

for model, domain in [(stable(1.5), R2), (stable(1.5), S2), (triangle(), R2)]:
    v = validity_range(model, domain)
    print(f"{model.family} alpha2={model.alpha2} on {domain.label()}: {v.status}")

# %%
# A known-invalid cell should produce a witness quickly.
config, cert = counterexample_search(stable(2.5), R2, budget=1000, seed=0)
print(cert.summary())
print(config.sites)

# %%
# A valid model gives nothing. That is evidence, not proof.
print(counterexample_search(stable(1.0), R2, budget=200, seed=0))
