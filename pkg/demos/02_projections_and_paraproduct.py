"""Scale projections and the five-part product decomposition.

P_j picks the scaling content at level j, Q_j one detail band; their ladder
telescopes to the identity.  The pointwise product of two fields splits into
low-high, diagonal, two near-diagonal bands and high-low parts whose sum
recovers the product exactly for band-limited inputs.
"""

import numpy as np

from oscillet import GridFunction, GridSpec, build_basis, lp_norm, rel_l2_error
from oscillet.wavelet import paraproduct

spec = GridSpec(n=1, J=9, j_min=0)
basis = build_basis("meyer", spec)
rng = np.random.default_rng(1)

f = basis.band_limit(GridFunction(spec, rng.standard_normal(spec.shape)))

print("ladder P_{j+1} = P_j + Q_j:")
for j in (0, 3, 6):
    lhs = basis.project(f, j + 1, "P")
    rhs = basis.project(f, j, "P") + basis.project(f, j, "Q")
    print(f"  j={j}: {rel_l2_error(lhs, rhs):.2e}")

total = basis.project(f, 0, "P")
for j in basis.detail_levels:
    total = total + basis.project(f, j, "Q")
print(f"telescoped sum vs f: {rel_l2_error(total, f):.2e}")

print()
u = basis.band_limit(GridFunction(spec, rng.standard_normal(spec.shape)))
v = basis.band_limit(GridFunction(spec, rng.standard_normal(spec.shape)))
parts = paraproduct(basis, u, v)
uv = GridFunction(spec, u.data * v.data)
names = ("low-high", "diagonal", "band-up", "band-down", "high-low")
print("paraproduct part sizes (L2):")
for name, part in zip(names, parts.as_list()):
    print(f"  {name:<10} {lp_norm(part, 2):.4f}")
print(f"sum vs pointwise product: {rel_l2_error(parts.total(), uv):.2e}")

const = GridFunction(spec, np.full(spec.shape, 2.0 + 0j))
pc = paraproduct(basis, const, v)
print("\nconstant first factor: diagonal and band parts vanish:")
print(f"  diagonal {lp_norm(pc.diagonal, 2):.1e}, "
      f"bands {lp_norm(pc.band_up, 2):.1e} / {lp_norm(pc.band_down, 2):.1e}")
