"""Windows and bases on the discrete torus.

Walks through the frequency-domain construction: the scaling/detail window
pair, the two algebraic identities that make the family orthonormal, and the
resulting exactness of the transform on the grid.
"""

import numpy as np

from oscillet import GridFunction, GridSpec, build_basis, lp_norm, rel_l2_error
from oscillet.wavelet import TWO_PI, MeyerWindow, WaveletIndex

print("=" * 64)
print("1. The window pair")
print("=" * 64)
w = MeyerWindow()
for xi, label in [(0.0, "xi = 0"), (TWO_PI / 3, "xi = 2pi/3"),
                  (np.pi / 2, "xi = pi/2"), (np.pi, "xi = pi")]:
    print(f"  psi0({label:<10}) = {w.psi0(np.array([xi]))[0]:.6f}   "
          f"omega = {w.omega(np.array([xi]))[0]:.6f}")

xi = np.linspace(TWO_PI / 3, 2 * TWO_PI / 3, 2001)
id1 = np.max(np.abs(w.omega(xi) ** 2 + w.omega(2 * xi) ** 2 - 1))
id2 = np.max(np.abs(w.omega(xi) ** 2 + w.omega(TWO_PI - xi) ** 2 - 1))
print(f"\n  partition identities on the transition interval: "
      f"{id1:.2e}, {id2:.2e}")

print()
print("=" * 64)
print("2. Orthonormality and exact round trips (n=1, J=9)")
print("=" * 64)
spec = GridSpec(n=1, J=9, j_min=0)
basis = build_basis("meyer", spec)
rng = np.random.default_rng(0)

idxs = [WaveletIndex((1,), j, (int(rng.integers(0, 1 << j)),))
        for j in basis.detail_levels] + [WaveletIndex((0,), 0, (0,))]
worst = 0.0
for a in idxs:
    ca = basis.analyze(basis.basis_function(a))
    for b in idxs:
        worst = max(worst, abs(ca.get(b) - (1.0 if a == b else 0.0)))
print(f"  gram deviation over {len(idxs)}^2 random pairs: {worst:.2e}")

f = basis.band_limit(GridFunction(spec, rng.standard_normal(spec.shape)))
c = basis.analyze(f)
print(f"  round trip:        {rel_l2_error(basis.synthesize(c), f):.2e}")
print(f"  parseval gap:      {abs(c.energy() - lp_norm(f, 2)**2):.2e}")

print()
print("=" * 64)
print("3. Daubechies cascade (m0 = 6)")
print("=" * 64)
daub = build_basis("daubechies", spec, m0=6)
g = GridFunction(spec, rng.standard_normal(spec.shape))
cd = daub.analyze(g)
print(f"  round trip:        {rel_l2_error(daub.synthesize(cd), g):.2e}")
x = spec.axis_coordinates()
psi = daub.basis_function(WaveletIndex((1,), 5, (9,)))
moments = [abs(spec.cell_volume * np.sum(x**a * psi.data.real))
           for a in range(6)]
print("  discrete moments of a level-5 wavelet:",
      " ".join(f"{m:.1e}" for m in moments))
