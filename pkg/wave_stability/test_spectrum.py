"""
Tests for the Evans function, stability indices, spectral curves and certificates
"""

import math

import numpy as np
from django.test import SimpleTestCase

from wave_stability.exceptions import (
    AbelViolation,
    DegenerateIndex,
    InvalidConfig,
    PreconditionFailed,
    WindowTooNarrow,
)
from wave_stability.floquet import (
    HillPropagator,
    fast_path_check,
    hill_discriminant_slope,
    hill_evaluation,
    monodromy,
    monodromy_series,
)
from wave_stability.potential import sine_gordon
from wave_stability.spectrum import (
    Branch,
    CertificateKind,
    EvansEvaluator,
    InfiniteSpeedVerdict,
    ModulationalClass,
    StabilityIndices,
    classify_modulational,
    evans,
    find_unstable_point,
    g_function,
    hill_spectrum,
    hill_spectrum_for,
    indices,
    infinite_speed_stability,
    local_tangents,
    multiplier_path,
    multipliers,
    parallel_map,
    real_eigenvalue_certificate,
    real_periodic_eigenvalues,
    spectral_bound,
    trace_branches,
    trace_curve,
)
from wave_stability.tolerances import Tolerances
from wave_stability.wavetrain import WaveParameters, period_energy_derivative, profile

SQRT2 = math.sqrt(2.0)
REPRESENTATIVE = ((0.0, SQRT2), (0.0, 0.5), (-2.0, 0.5), (2.0, SQRT2))


def indices_record(**overrides):
    values = dict(
        gamma=1,
        rho=1,
        kappa=0.5,
        q=2.0,
        d2_evans=7.0,
        d2_evans_fd=7.0,
        vanish_order_p=1,
        rho_routes=(1.0, 1.0, 1.0),
        routes_agree=True,
        degenerate=False,
        T_E=-1.0,
        delta=1.0,
    )
    values.update(overrides)
    return StabilityIndices(**values)


class CoupledAgreementTest(SimpleTestCase):
    """The vectorized Evans function against det(M - mu I) of the coupled integration"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        potential = sine_gordon()
        rng = np.random.default_rng(11)
        cls.cases = []
        for E, c in REPRESENTATIVE:
            wave = profile(potential, WaveParameters(E, c))
            lams = rng.uniform(-1, 1, 20) + 1j * rng.uniform(-1, 1, 20)
            thetas = rng.uniform(-math.pi, math.pi, 20)
            moduli = np.exp(rng.uniform(-0.5, 0.5, 20) + 1j * rng.uniform(-math.pi, math.pi, 20))
            coupled = [monodromy(wave, lam).matrix for lam in lams]
            cls.cases.append((wave, EvansEvaluator(wave), lams, thetas, moduli, coupled))

    def test_evans_matches_coupled_determinant(self):
        for wave, evaluator, lams, thetas, _, coupled in self.cases:
            for lam, theta, matrix in zip(lams, thetas, coupled):
                with self.subTest(klass=wave.klass, lam=lam):
                    direct = np.linalg.det(matrix - np.exp(1j * theta) * np.eye(2))
                    value = evaluator.evans([lam], theta)[0]
                    self.assertLess(abs(value - direct) / evaluator.scale([lam])[0], 5e-6)
                    self.assertEqual(evans(wave, lam, theta), value)

    def test_conjugation_symmetry(self):
        for wave, evaluator, lams, thetas, _, coupled in self.cases:
            mirrored = evaluator.evans(np.conj(lams), -thetas)
            for lam, theta, matrix, value in zip(lams, thetas, coupled, mirrored):
                with self.subTest(klass=wave.klass, lam=lam):
                    direct = np.linalg.det(matrix - np.exp(1j * theta) * np.eye(2))
                    scale = evaluator.scale([lam])[0]
                    self.assertLess(abs(value - np.conj(direct)) / scale, 5e-6)

    def test_reduced_reflection(self):
        for wave, evaluator, lams, _, moduli, coupled in self.cases:
            left = evaluator.tilde(-lams, moduli)
            for lam, mu, matrix, value in zip(lams, moduli, coupled, left):
                with self.subTest(klass=wave.klass, lam=lam):
                    # e^{-q lambda} mu D(lambda, 1/mu) from the coupled monodromy
                    direct = np.linalg.det(matrix - np.eye(2) / mu) * mu * np.exp(-wave.q * lam)
                    growth = np.exp(wave.q * lam)
                    scale = 1.0 + abs(evaluator.hill([lam])[0]) + abs(mu * growth) + abs(1.0 / (mu * growth))
                    self.assertLess(abs(value - direct) / scale, 5e-6)

    def test_multipliers_are_coupled_eigenvalues(self):
        for wave, _, lams, _, _, coupled in self.cases:
            for lam, matrix in zip(lams, coupled):
                with self.subTest(klass=wave.klass, lam=lam):
                    pair = multipliers(wave, lam)
                    eig = np.linalg.eigvals(matrix)
                    scale = max(1.0, float(np.max(np.abs(eig))))
                    for mu in pair:
                        self.assertLess(min(abs(mu - e) for e in eig) / scale, 5e-6)
                    expected = np.exp(2.0 * wave.q * lam)
                    self.assertLess(abs(pair[0] * pair[1] - expected) / abs(expected), 1e-8)

    def test_fast_path_check(self):
        for wave, evaluator, _, _, _, _ in self.cases:
            with self.subTest(klass=wave.klass):
                check = evaluator.fast_path
                self.assertIs(check, fast_path_check(wave))
                self.assertLess(check.disagreement, 1e-5)
                self.assertLess(check.abel_residual, 1e-8)
                self.assertEqual(len(check.as_dict()["probes"]), 3)

    def test_fast_path_disagreement_raises(self):
        wave = profile(sine_gordon(), WaveParameters(-2.0, 0.5))
        tol = Tolerances.from_settings(fast_path_tol=1e-14)
        with self.assertRaises(AbelViolation) as ctx:
            EvansEvaluator(wave, tol)
        self.assertEqual(ctx.exception.exit_code, 3)
        self.assertGreater(ctx.exception.details["disagreement"], 1e-14)


class EvansFunctionTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.potential = sine_gordon()
        cls.waves = [profile(cls.potential, WaveParameters(E, c)) for E, c in REPRESENTATIVE]

    def test_multiplier_path_keeps_labels(self):
        wave = self.waves[2]
        lams = 1j * np.linspace(0.05, 0.5, 20)
        path = multiplier_path(wave, lams)
        self.assertEqual(len(path), 20)
        self.assertEqual(path[0], multipliers(wave, lams[0]))
        for before, after in zip(path[:-1], path[1:]):
            keep = abs(after[0] - before[0]) + abs(after[1] - before[1])
            swap = abs(after[1] - before[0]) + abs(after[0] - before[1])
            self.assertLessEqual(keep, swap)

    def test_local_expansion(self):
        wave = self.waves[0]
        series = monodromy_series(wave)
        lam, theta = complex(3e-4, 5e-4), 7e-4
        expected = -series.kappa * lam * lam + (1j * theta - wave.q * lam) ** 2
        value = evans(wave, lam, theta)
        self.assertLess(abs(value - expected) / abs(expected), 0.1)

    def test_g_vanishes_on_the_imaginary_spectrum(self):
        # subluminal rotational waves are spectrally stable, so i*R is spectrum near 0
        wave = self.waves[2]
        curve = trace_curve(wave, Branch.PLUS, 0.5, 8)
        lam = curve.points[-1].lam
        self.assertLess(abs(g_function(wave, lam)), 1e-8)


class SpectralInvariantTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.potential = sine_gordon()
        cls.waves = {(E, c): profile(cls.potential, WaveParameters(E, c)) for E, c in REPRESENTATIVE}

    def test_spectral_bound(self):
        self.assertAlmostEqual(spectral_bound(self.waves[(-2.0, 0.5)]), 1.0, places=8)
        self.assertAlmostEqual(spectral_bound(self.waves[(0.0, 0.5)]), 1.0, places=8)
        # max(sqrt(2 M) |c|, (2 c^2 + 1 + (c^2 - 1) / c^2) / 4) at c^2 = 2
        self.assertAlmostEqual(spectral_bound(self.waves[(0.0, SQRT2)]), 2.0, places=8)

    def test_g_is_non_positive_on_the_imaginary_axis(self):
        for key, wave in self.waves.items():
            for s in np.linspace(0.1, 3.0, 12):
                with self.subTest(wave=key, s=s):
                    self.assertLessEqual(g_function(wave, 1j * s), 1e-10)

    def test_g_is_positive_far_along_the_real_axis(self):
        for key in ((0.0, SQRT2), (2.0, SQRT2)):
            with self.subTest(wave=key):
                self.assertGreater(g_function(self.waves[key], 3.0), 0.0)

    def test_standing_wave_curves_are_hill_band_preimages(self):
        wave = profile(self.potential, WaveParameters(-2.0, 0.0))
        self.assertEqual(wave.q, 0.0)
        spectrum = hill_spectrum(wave)
        curve = trace_curve(wave, Branch.PLUS, 1.0, 8)
        for point in curve.points[1:]:
            with self.subTest(theta=point.theta):
                self.assertLessEqual(abs(point.lam.real), 1e-6)
                nu = float((point.lam**2).real)
                self.assertLess(nu, 0.0)
                discriminant = hill_evaluation(wave, nu).discriminant.real
                self.assertAlmostEqual(discriminant, 2.0 * math.cos(point.theta), delta=1e-6)
                self.assertTrue(any(lo - 1e-6 <= nu <= hi + 1e-6 for lo, hi in spectrum.bands))


class IndicesTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.potential = sine_gordon()

    def test_librational_grid(self):
        for E in (-0.9, -0.5, 0.0, 0.5, 0.9):
            for c in (0.5, 2.0):
                with self.subTest(E=E, c=c):
                    wave = profile(self.potential, WaveParameters(E, c))
                    result = indices(wave)
                    self.assertEqual(result.rho, -1)
                    self.assertFalse(result.degenerate)
                    if c < 1:
                        self.assertEqual(result.gamma, -1)

    def test_rotational_grid(self):
        for E, c in ((-3.0, 0.5), (-1.5, 0.5), (1.5, 2.0), (3.0, 2.0)):
            with self.subTest(E=E, c=c):
                result = indices(profile(self.potential, WaveParameters(E, c)))
                self.assertEqual(result.rho, 1)

    def test_evans_curvature_and_routes(self):
        for E, c in REPRESENTATIVE:
            with self.subTest(E=E, c=c):
                result = indices(profile(self.potential, WaveParameters(E, c)))
                self.assertLess(result.d2_residual, 1e-4)
                self.assertTrue(result.routes_agree)
                self.assertEqual(len({np.sign(r) for r in result.rho_routes}), 1)
                data = result.as_dict()
                self.assertIn(data["gamma"], (-1, 1))
                self.assertEqual(data["rho"], result.rho)

    def test_tangents(self):
        wave = profile(self.potential, WaveParameters(-2.0, 0.5))
        s_plus, s_minus = local_tangents(wave)
        series = monodromy_series(wave)
        self.assertAlmostEqual(abs(1.0 / s_plus - wave.q), math.sqrt(abs(series.kappa)), places=8)
        self.assertAlmostEqual((1.0 / s_plus + 1.0 / s_minus).real, 2.0 * wave.q, places=8)


class ModulationalClassTest(SimpleTestCase):
    def test_degenerate(self):
        self.assertEqual(
            classify_modulational(indices_record(rho=0, degenerate=True)),
            ModulationalClass.DEGENERATE,
        )
        with self.assertRaises(DegenerateIndex):
            classify_modulational(indices_record(rho=0, degenerate=True), strict=True)

    def test_strong(self):
        self.assertEqual(
            classify_modulational(indices_record(rho=-1)), ModulationalClass.STRONG_INSTABILITY
        )

    def test_weak(self):
        self.assertEqual(
            classify_modulational(indices_record()), ModulationalClass.WEAK_INSTABILITY_POSSIBLE
        )

    def test_double_root_with_higher_order(self):
        record = indices_record(kappa=4.0, q=2.0, vanish_order_p=2)
        self.assertEqual(classify_modulational(record), ModulationalClass.STRONG_INSTABILITY)

    def test_indeterminate_gamma_renders(self):
        self.assertEqual(indices_record(gamma=None).as_dict()["gamma"], "Indeterminate")


class SpectralCurveTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.potential = sine_gordon()
        cls.stable = profile(cls.potential, WaveParameters(-2.0, 0.5))

    def test_subluminal_rotational_curves_stay_on_the_axis(self):
        for theta_max in (math.pi, -math.pi):
            for curve in trace_branches(self.stable, theta_max, 128):
                with self.subTest(branch=curve.branch, theta_max=theta_max):
                    self.assertGreater(len(curve.points), 1)
                    self.assertLessEqual(curve.max_real_part, 1e-6)
                    self.assertEqual(curve.points[0].lam, 0j)

    def test_curve_rows(self):
        curve = trace_curve(self.stable, "Minus", 0.2, 4)
        rows = curve.rows()
        self.assertEqual(len(rows), 5)
        self.assertEqual(rows[0]["branch"], "Minus")
        self.assertEqual(
            set(rows[0]), {"theta", "re_lambda", "im_lambda", "branch", "abs_evans"}
        )
        self.assertTrue(curve.complete)

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidConfig):
            trace_curve(self.stable, Branch.PLUS, 4.0)
        with self.assertRaises(InvalidConfig):
            trace_curve(self.stable, Branch.PLUS, 0.0)
        with self.assertRaises(InvalidConfig):
            trace_curve(self.stable, Branch.PLUS, 1.0, 0)

    def test_no_real_eigenvalues(self):
        self.assertEqual(real_periodic_eigenvalues(self.stable), [])
        self.assertEqual(real_periodic_eigenvalues(self.stable, antiperiodic=True), [])


class CertificateTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.potential = sine_gordon()

    def test_superluminal_rotational_instability(self):
        wave = profile(self.potential, WaveParameters(2.0, SQRT2))
        certificate = find_unstable_point(wave)
        self.assertEqual(certificate.kind, CertificateKind.G_SIGN_CHANGE)
        self.assertGreaterEqual(certificate.lambda0.real, 1e-3)
        self.assertLessEqual(certificate.residual, 1e-8)
        self.assertLessEqual(certificate.evans_residual, 1e-6)
        self.assertIn("bracket", certificate.as_dict())

    def test_subluminal_precondition(self):
        wave = profile(self.potential, WaveParameters(-2.0, 0.5))
        with self.assertRaises(PreconditionFailed):
            find_unstable_point(wave)

    def test_subluminal_librational_real_eigenvalue(self):
        wave = profile(self.potential, WaveParameters(0.0, 0.5))
        roots = real_periodic_eigenvalues(wave, upper=1.0)
        self.assertTrue(roots)
        self.assertTrue(all(0.0 < r <= 1.0 for r in roots))
        evaluator = EvansEvaluator(wave)
        for root in roots:
            self.assertLessEqual(abs(evaluator.real_axis([root])[0]), 1e-7)
            certificate = real_eigenvalue_certificate(wave, root)
            self.assertEqual(certificate.kind, CertificateKind.REAL_PERIODIC_EIGENVALUE)
            self.assertEqual(certificate.theta, 0.0)

    def test_infinite_speed_rotational(self):
        result = infinite_speed_stability(self.potential, 2.0)
        self.assertEqual(result.verdict, InfiniteSpeedVerdict.UNSTABLE)
        self.assertTrue(result.negative_gaps)
        self.assertEqual(result.as_dict()["verdict"], "Unstable")

    def test_superluminal_librational_certificate(self):
        wave = profile(self.potential, WaveParameters(0.0, SQRT2))
        self.assertGreater(period_energy_derivative(self.potential, wave.params), 0.0)
        certificate = find_unstable_point(wave)
        self.assertEqual(certificate.kind, CertificateKind.G_SIGN_CHANGE)
        self.assertGreater(certificate.lambda0.real, 0.0)
        self.assertLessEqual(certificate.residual, 1e-8)
        self.assertLessEqual(certificate.evans_residual, 1e-6)

    def test_infinite_speed_librational(self):
        result = infinite_speed_stability(self.potential, 0.0)
        # the gap below nu = 0 reaches the origin
        self.assertEqual(result.verdict, InfiniteSpeedVerdict.UNSTABLE)
        self.assertAlmostEqual(max(hi for _, hi in result.negative_gaps), 0.0, delta=1e-6)
        self.assertEqual(len(result.as_dict()["negative_gaps"]), len(result.negative_gaps))


class HillSpectrumTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.potential = sine_gordon()

    def test_rotational_top_edge(self):
        wave = profile(self.potential, WaveParameters(-2.0, 0.5))
        spectrum = hill_spectrum(wave)
        self.assertLessEqual(min(abs(p) for p in spectrum.periodic_eigenvalues), 1e-6)
        self.assertLessEqual(abs(spectrum.bands[-1][1]), 1e-6)

    def test_librational_second_edge(self):
        for c in (SQRT2, 0.5):
            with self.subTest(c=c):
                spectrum = hill_spectrum(profile(self.potential, WaveParameters(0.0, c)))
                self.assertLessEqual(min(abs(p) for p in spectrum.periodic_eigenvalues), 1e-6)
                below = [gap for gap in spectrum.gaps if abs(gap[1]) <= 1e-6]
                self.assertEqual(len(below), 1)
                self.assertGreater(below[0][1] - below[0][0], 1e-3)

    def test_discriminant_slope_sign_is_rho(self):
        for E, c in REPRESENTATIVE:
            with self.subTest(E=E, c=c):
                wave = profile(self.potential, WaveParameters(E, c))
                slope = hill_discriminant_slope(wave)
                self.assertEqual(int(np.sign(slope.value)), indices(wave).rho)

    def test_constant_potential_has_one_band(self):
        propagator = HillPropagator.constant(1.0, 2.0 * math.pi)
        spectrum = hill_spectrum_for(propagator, -2.5, 2.0)
        self.assertEqual(len(spectrum.bands), 1)
        self.assertEqual(spectrum.bands[0][0], -2.5)
        self.assertAlmostEqual(spectrum.bands[0][1], 1.0, places=10)
        self.assertEqual(spectrum.gaps, [])
        self.assertEqual(spectrum.negative_gaps(), [])

    def test_window_without_bands(self):
        propagator = HillPropagator.constant(1.0, 2.0 * math.pi)
        with self.assertRaises(WindowTooNarrow):
            hill_spectrum_for(propagator, 2.0, 3.0)

    def test_window_must_reach_negative_values(self):
        wave = profile(self.potential, WaveParameters(0.0, SQRT2))
        with self.assertRaises(InvalidConfig):
            hill_spectrum(wave, nu_min=0.5, nu_max=2.0)

    def test_threaded_scan_matches_sequential(self):
        wave = profile(self.potential, WaveParameters(0.0, SQRT2))
        self.assertEqual(hill_spectrum(wave, threads=4), hill_spectrum(wave))
        self.assertEqual(parallel_map(abs, [-3, 2, -1], threads=2), [3, 2, 1])
