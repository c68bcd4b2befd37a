import numpy as np
import pytest
from scipy.integrate import quad

from oscillet.errors import ParameterError
from oscillet.grid import GridFunction, GridSpec, lp_norm, rel_l2_error
from oscillet.semigroup import (
    SemigroupSpec,
    TimeGrid,
    calibrate_family,
    check_decay_bounds,
    check_dual_bound,
    default_time_grid,
    evolve_coefficients,
    fit_ctilde,
    frames_from_tcf,
    heat_apply,
    heat_frames,
    pi_phi_report,
    read_time_coeff_field,
    write_time_coeff_field,
)
from oscillet.wavelet import WaveletIndex, build_basis
from conftest import band_limited


class TestHeatApply:
    def test_identity_at_zero(self, spec1d, rng):
        sg = SemigroupSpec(1.0, spec1d)
        f = GridFunction(spec1d, rng.standard_normal(spec1d.shape))
        np.testing.assert_allclose(heat_apply(sg, f, 0.0).data, f.data,
                                   atol=1e-14)

    def test_pure_mode(self, spec1d):
        sg = SemigroupSpec(1.0, spec1d)
        x = spec1d.meshgrid()[0]
        for m in (1, 5, -17):
            f = GridFunction(spec1d, np.exp(2j * np.pi * m * x))
            out = heat_apply(sg, f, 0.02)
            scale = np.exp(-0.02 * (2 * np.pi * abs(m)) ** 2)
            np.testing.assert_allclose(out.data, scale * f.data, atol=1e-12)

    def test_semigroup_law_and_contraction(self, spec1d, rng):
        for beta in (0.5, 1.0):
            sg = SemigroupSpec(beta, spec1d)
            f = GridFunction(spec1d, rng.standard_normal(spec1d.shape))
            lhs = heat_apply(sg, heat_apply(sg, f, 0.004), 0.006)
            rhs = heat_apply(sg, f, 0.010)
            assert rel_l2_error(lhs, rhs) < 1e-10
            assert lp_norm(heat_apply(sg, f, 0.5), 2) <= lp_norm(f, 2) + 1e-14

    def test_mass_conserved(self, spec1d, rng):
        sg = SemigroupSpec(0.75, spec1d)
        f = GridFunction(spec1d, rng.standard_normal(spec1d.shape))
        assert np.mean(heat_apply(sg, f, 1.3).data) == pytest.approx(
            np.mean(f.data), abs=1e-14)

    def test_negative_time(self, spec1d):
        sg = SemigroupSpec(1.0, spec1d)
        with pytest.raises(ParameterError):
            heat_apply(sg, GridFunction.zeros(spec1d), -0.1)


class TestTimeGrid:
    def test_weights_sum(self):
        tg = TimeGrid(1e-6, 4.0, 173)
        assert np.sum(tg.weights()) == pytest.approx(np.log(4.0 / 1e-6))

    def test_validation(self):
        with pytest.raises(ParameterError):
            TimeGrid(1.0, 0.5, 10)


class TestEvolveCoefficients:
    def test_slices_match_direct_analysis(self, meyer1d, rng):
        sg = SemigroupSpec(1.0, meyer1d.spec)
        tg = TimeGrid(1e-4, 1.0, 5)
        f = band_limited(meyer1d, rng)
        tcf = evolve_coefficients(sg, meyer1d, f, tg)
        for ell, t in enumerate(tg.nodes()):
            direct = meyer1d.analyze(heat_apply(sg, f, t))
            sl = tcf.slice(ell)
            for key in direct.detail:
                np.testing.assert_allclose(sl.detail[key], direct.detail[key],
                                           atol=1e-12)

    def test_cross_level_leakage_band(self, meyer1d):
        # heat of a single wavelet stays within |j - j'| <= 3 (here <= 1)
        sg = SemigroupSpec(1.0, meyer1d.spec)
        tg = TimeGrid(1e-7, 0.5, 16)
        idx = WaveletIndex((1,), 4, (5,))
        tcf = evolve_coefficients(sg, meyer1d, meyer1d.basis_function(idx), tg)
        for (eps, j), arr in tcf.detail.items():
            if abs(j - idx.j) > 3:
                assert np.max(np.abs(arr)) < 1e-10
        # the original index dominates at the earliest node
        sl = tcf.slice(0)
        assert abs(sl.get(idx)) > 0.9
        assert abs(sl.get(idx)) == pytest.approx(sl.max_abs(), rel=1e-12)

    def test_zero_field(self, meyer1d):
        sg = SemigroupSpec(1.0, meyer1d.spec)
        tg = TimeGrid(1e-4, 1.0, 3)
        tcf = evolve_coefficients(sg, meyer1d, GridFunction.zeros(meyer1d.spec), tg)
        assert all(np.max(np.abs(a)) == 0 for a in tcf.detail.values())


class TestCalibratedFamily:
    @pytest.mark.parametrize("beta", [0.5, 0.75, 1.0])
    def test_admissibility(self, beta):
        fam = calibrate_family(beta)
        assert fam.admissibility["moment_residual"] == 0.0
        assert fam.admissibility["calderon_residual"] < 1e-4
        assert np.isfinite(fam.C_beta) and fam.C_beta > 0

    def test_damped_integral_matches_C_beta(self):
        # independent quadrature of the defining scalar integral
        beta = 1.0
        fam = calibrate_family(beta)
        val, _ = quad(lambda t: fam.radial(np.array([t ** (1 / (2 * beta))]))[0]
                      * np.exp(-t) / t,
                      (2 * np.pi / 3) ** 2, (8 * np.pi / 3) ** 2, limit=300)
        assert val == pytest.approx(1.0 / fam.C_beta, rel=1e-8)


class TestPiPhi:
    def test_zero(self, meyer1d):
        tg = default_time_grid(meyer1d.spec, 1.0, L=32)
        fam = calibrate_family(1.0)
        frames = (GridFunction.zeros(meyer1d.spec) for _ in range(tg.L))
        rec, _ = pi_phi_report(fam, frames, tg, meyer1d.spec)
        assert lp_norm(rec, 2) == 0.0

    @pytest.mark.parametrize("beta", [0.5, 0.75, 1.0])
    def test_reconstruction_identity(self, beta, meyer1d, rng):
        sg = SemigroupSpec(beta, meyer1d.spec)
        fam = calibrate_family(beta)
        tg = default_time_grid(meyer1d.spec, beta, L=256)
        c = meyer1d.analyze(band_limited(meyer1d, rng))
        c.scaling[:] = 0.0
        f = meyer1d.synthesize(c)
        rec, rep = pi_phi_report(fam, heat_frames(sg, f, tg), tg, meyer1d.spec)
        assert rel_l2_error(rec, f) < 1e-3
        assert rep.warning is None

    def test_mode_scalar_matches_calibration(self):
        # per-mode reconstruction multiplier equals 1 (condition (iii) rescaled)
        beta = 1.0
        fam = calibrate_family(beta)
        spec = GridSpec(1, 8, 0)
        tg = default_time_grid(spec, beta, L=512)
        nodes, w = tg.nodes(), tg.weights()
        for m in (1, 7, 40):
            xi = 2 * np.pi * m
            vals = (np.exp(-nodes * xi ** (2 * beta))
                    * fam.radial(nodes ** (1 / (2 * beta)) * xi))
            scalar = fam.C_beta * np.sum(w * vals)
            assert scalar == pytest.approx(1.0, abs=2e-3)

    def test_coarse_grid_warns(self, meyer1d):
        fam = calibrate_family(1.0)
        tg = TimeGrid(1e-2, 0.1, 8)   # misses both tails
        frames = (GridFunction.zeros(meyer1d.spec) for _ in range(tg.L))
        with pytest.warns(UserWarning):
            pi_phi_report(fam, frames, tg, meyer1d.spec)


class TestDecayBounds:
    def test_zero_data(self, meyer1d):
        sg = SemigroupSpec(1.0, meyer1d.spec)
        tg = TimeGrid(1e-5, 4.0, 16)
        zero = GridFunction.zeros(meyer1d.spec)
        tcf = evolve_coefficients(sg, meyer1d, zero, tg)
        rep = check_decay_bounds(tcf, meyer1d.analyze(zero), N=4.0)
        assert rep.max_r2 == 0.0
        assert np.all(rep.max_r1 == 0.0)
        assert rep.violations == 0

    def test_single_coefficient_stability(self):
        reports = []
        for J in (8, 9):
            spec = GridSpec(1, J, 0)
            basis = build_basis("meyer", spec)
            sg = SemigroupSpec(1.0, spec)
            tg = default_time_grid(GridSpec(1, 9, 0), 1.0, L=128)
            c0 = basis.analyze(GridFunction.zeros(spec))
            c0.set(WaveletIndex((1,), 3, (3,)), 1.0)
            tcf = evolve_coefficients(sg, basis, basis.synthesize(c0), tg)
            rep = check_decay_bounds(tcf, c0, N=4.0)
            reports.append((J, rep))
            assert rep.seam_residual < 1e-10
        ct, growth = fit_ctilde(reports)
        assert ct > 0
        r1 = [rep.max_r1[-1] for _, rep in reports]
        assert abs(r1[1] / r1[0] - 1) < 0.2


class TestDualBound:
    def test_zero(self, meyer1d):
        sg = SemigroupSpec(1.0, meyer1d.spec)
        tg = TimeGrid(1e-5, 4.0, 16)
        zero = GridFunction.zeros(meyer1d.spec)
        tcf = evolve_coefficients(sg, meyer1d, zero, tg)
        rep = check_dual_bound(meyer1d.analyze(zero), tcf, N=4.0)
        assert rep.max_ratio == 0.0
        assert rep.violations == 0

    def test_single_mode_finite_and_concentrated(self, meyer1d, rng):
        sg = SemigroupSpec(1.0, meyer1d.spec)
        fam = calibrate_family(1.0)
        tg = default_time_grid(meyer1d.spec, 1.0, L=192)
        c0 = meyer1d.analyze(GridFunction.zeros(meyer1d.spec))
        c0.set(WaveletIndex((1,), 4, (7,)), 1.0)
        tcf = evolve_coefficients(sg, meyer1d, meyer1d.synthesize(c0), tg)
        rec, _ = pi_phi_report(fam, frames_from_tcf(meyer1d, tcf), tg,
                               meyer1d.spec)
        c_rec = meyer1d.analyze(rec)
        rep_lo = check_dual_bound(c_rec, tcf, N=2.0)
        rep_hi = check_dual_bound(c_rec, tcf, N=6.0)
        assert np.isfinite(rep_lo.max_ratio) and rep_lo.max_ratio > 0
        # larger N concentrates the integrand near t ~ 2^{-2 j beta}
        assert rep_hi.concentration >= rep_lo.concentration


def test_time_field_serialization(tmp_path, meyer1d, rng):
    sg = SemigroupSpec(0.75, meyer1d.spec)
    tg = TimeGrid(1e-4, 2.0, 6)
    f = band_limited(meyer1d, rng)
    tcf = evolve_coefficients(sg, meyer1d, f, tg)
    path = tmp_path / "t.oslt"
    write_time_coeff_field(tcf, str(path))
    back = read_time_coeff_field(str(path))
    assert back.beta == 0.75
    assert back.tg == tg
    for key in tcf.detail:
        np.testing.assert_array_equal(back.detail[key], tcf.detail[key])
