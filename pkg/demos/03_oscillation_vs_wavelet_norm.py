"""The two sides of the norm equivalence.

The definition-side norm takes a sup over cubes of a cutoff, polynomial-
matched local oscillation measured in a Triebel-Lizorkin norm; the
coefficient-side norm weighs detail coefficients over the cubes directly.
On random unit-norm fields the ratio sits in a narrow bracket, and at
gamma2 = n/p the Morrey sup collapses to the plain norm exactly.
"""

import warnings

from oscillet import (
    CutoffFamily,
    GridSpec,
    SpaceParams,
    build_basis,
    oscillation_norm_report,
    tl_norm,
    tlm_wavelet_norm,
)
from oscillet.operators import _random_detail_field

warnings.simplefilter("ignore")

spec = GridSpec(n=1, J=9, j_min=0)
basis = build_basis("meyer", spec)
sp = SpaceParams(gamma1=0.0, gamma2=0.3, p=2.0, q=2.0)
cutoff = CutoffFamily(n=1)

print(f"params: gamma1={sp.gamma1} gamma2={sp.gamma2} p={sp.p} q={sp.q}")
print(f"{'sample':>6} {'oscillation':>12} {'wavelet':>10} {'ratio':>8}  argmax cube")
ratios = []
for s in range(8):
    c = _random_detail_field(basis, sp, seed=100 + s)
    f = basis.synthesize(c)
    wav = tlm_wavelet_norm(c, sp)
    rep = oscillation_norm_report(f, sp, cutoff, 1, basis)
    ratios.append(rep.value / wav)
    print(f"{s:>6} {rep.value:>12.5f} {wav:>10.5f} {ratios[-1]:>8.4f}  "
          f"j={rep.argmax_cube.j} k={rep.argmax_cube.k}")
print(f"\nbracket over 8 samples: [{min(ratios):.4f}, {max(ratios):.4f}]")

print("\ncollapse at gamma2 = n/p (values agree bit for bit):")
sp_c = SpaceParams(0.1, 1.0 / 2.0, 2.0, 2.0)
c = _random_detail_field(basis, sp_c, seed=7)
print(f"  tlm = {tlm_wavelet_norm(c, sp_c)!r}")
print(f"  tl  = {tl_norm(c, 0.1, 2.0, 2.0)!r}")

print("\na cubic polynomial has zero oscillation norm (m0 = 3):")
from oscillet.grid import GridFunction
x = spec.meshgrid()[0]
poly = GridFunction(spec, 1.0 - 2.0 * x + 0.8 * x**2 + 0.1 * x**3)
rep = oscillation_norm_report(poly, sp, cutoff, 3, basis,
                              cube_levels=range(0, 6))
print(f"  oscillation norm = {rep.value:.2e}")
