import json

import numpy as np
import pytest

from spheregp.covariance import (
    CovarianceModel,
    GammaField,
    ModelKind,
    covariance,
    covariance_matrix,
    local_anisotropy,
    mahalanobis_q,
    matern,
    nonstationary_correlation,
    normalizer_c,
)
from spheregp.errors import (
    DuplicateLocationError,
    InvalidInputError,
    InvalidSmoothnessError,
    ParameterOverflowError,
)
from spheregp.geometry import to_euclidean, to_spherical

from oracles import (
    dense_c,
    dense_local_anisotropy,
    dense_q,
    random_rotation,
    random_section5_model,
    random_sphere_points,
)

ISO = CovarianceModel.isotropic(-0.5)
UNIT = CovarianceModel.isotropic(0.0)  # gamma = 1 everywhere, Sigma = I
GENERAL = CovarianceModel.general([-0.5, -1.2, 1.44], [-3.2, -0.3, 1.44], 0.8)


class TestGammaField:
    def test_positive_everywhere(self, rng):
        g = GammaField(-3.2, -0.3, 1.44)
        pts = random_sphere_points(rng, 200)
        assert np.all(g(pts) > 0)

    def test_clamped_link(self):
        g = GammaField(500.0)
        assert np.isfinite(g([(0.0, 0.0)])[0])

    def test_nonfinite_coefficients_rejected(self):
        with pytest.raises(ParameterOverflowError):
            GammaField(np.nan)


class TestLocalAnisotropy:
    def test_identity_scaling(self, rng):
        pts = random_sphere_points(rng, 50)
        S = local_anisotropy(pts, UNIT)
        assert np.max(np.abs(S - np.eye(3))) < 1e-12

    def test_equal_scales_rank_one_form(self, rng):
        # constant gamma1 = gamma2 = g gives (1 - g) ss' + g I
        g = np.exp(-0.5)
        pts = random_sphere_points(rng, 100)
        xyz = to_euclidean(pts)
        S = local_anisotropy(pts, ISO)
        expected = (1 - g) * np.einsum("ni,nj->nij", xyz, xyz) + g * np.eye(3)
        assert np.max(np.abs(S - expected)) < 1e-12

    def test_determinant_equal_scales(self, rng):
        # direct 3x3 determinant oracle at gamma1 = gamma2 = e^-0.5
        pts = random_sphere_points(rng, 100)
        det = np.linalg.det(local_anisotropy(pts, ISO))
        assert np.max(np.abs(det - np.exp(-1.0))) < 1e-12

    def test_determinant_is_scale_product(self, rng):
        # rotation conjugation preserves the determinant for any kappa
        for _ in range(50):
            model = random_section5_model(rng)
            pt = random_sphere_points(rng, 1)[0]
            g1 = model.gamma1([pt])[0]
            g2 = model.gamma2([pt])[0]
            det = np.linalg.det(local_anisotropy([pt], model)[0])
            assert det == pytest.approx(g1 * g2, rel=1e-12)

    def test_matches_dense_oracle(self, rng):
        for _ in range(25):
            model = random_section5_model(rng)
            pt = random_sphere_points(rng, 1)[0]
            S = local_anisotropy([pt], model)[0]
            assert np.max(np.abs(S - dense_local_anisotropy(pt, model))) < 1e-12

    def test_symmetric_and_eigenvalue_floor(self, rng):
        pts = random_sphere_points(rng, 100)
        model = GENERAL
        S = local_anisotropy(pts, model)
        assert np.max(np.abs(S - np.swapaxes(S, -1, -2))) < 1e-12
        g1 = model.gamma1(pts)
        g2 = model.gamma2(pts)
        floor = np.minimum(1.0, np.minimum(g1, g2)) - 1e-10
        eig = np.linalg.eigvalsh(S)
        assert np.all(eig[:, 0] >= floor)


class TestMahalanobis:
    def test_zero_at_same_point(self):
        assert mahalanobis_q((0.3, 0.2), (0.3, 0.2), GENERAL) == 0.0

    def test_reduces_to_chordal_for_identity(self):
        q = mahalanobis_q((0.0, 0.0), (np.pi / 2, 0.0), UNIT)
        assert q == pytest.approx(np.sqrt(2.0), abs=1e-14)

    def test_against_dense_solve_oracle(self, rng):
        for _ in range(50):
            a, b = random_sphere_points(rng, 2)
            assert mahalanobis_q(a, b, ISO) == pytest.approx(dense_q(a, b, ISO), abs=1e-10)
            assert mahalanobis_q(a, b, GENERAL) == pytest.approx(dense_q(a, b, GENERAL), abs=1e-10)

    def test_symmetric(self, rng):
        a, b = random_sphere_points(rng, 2)
        assert mahalanobis_q(a, b, GENERAL) == mahalanobis_q(b, a, GENERAL)


class TestNormalizer:
    def test_one_at_same_point(self):
        assert normalizer_c((0.5, -0.7), (0.5, -0.7), GENERAL) == pytest.approx(1.0, abs=1e-14)

    def test_against_dense_determinant_oracle(self, rng):
        for _ in range(50):
            a, b = random_sphere_points(rng, 2)
            assert normalizer_c(a, b, ISO) == pytest.approx(dense_c(a, b, ISO), abs=1e-10)
            assert normalizer_c(a, b, GENERAL) == pytest.approx(dense_c(a, b, GENERAL), abs=1e-10)

    def test_bounded_by_one(self, rng):
        for _ in range(100):
            model = random_section5_model(rng)
            a, b = random_sphere_points(rng, 2)
            c = normalizer_c(a, b, model)
            assert 0.0 < c <= 1.0 + 1e-12


class TestMatern:
    def test_limit_at_zero(self):
        for nu in (0.5, 1.5, 2.5, 0.9, 3.7):
            assert matern(0.0, nu) == 1.0

    def test_exponential_closed_form(self):
        r = np.linspace(0.0, 10.0, 200)
        assert np.max(np.abs(matern(r, 0.5) - np.exp(-r))) < 1e-12
        assert matern(1.0, 0.5) == pytest.approx(np.exp(-1.0), abs=1e-15)

    def test_five_halves_value(self):
        # frozen from a 50-digit Bessel-series evaluation of
        # 2^(1-nu)/Gamma(nu) r^nu K_nu(r) at r = 1, nu = 5/2
        assert matern(1.0, 2.5) == pytest.approx(0.85838536273336542, abs=1e-14)
        assert matern(1.0, 2.5) == pytest.approx((1 + 3 + 3) * np.exp(-1.0) / 3, abs=1e-15)

    def test_half_integer_paths_match_bessel_path(self):
        # the generic Bessel route must agree with the closed forms
        r = np.linspace(1e-3, 8.0, 50)
        for nu in (0.5, 1.5, 2.5):
            closed = matern(r, nu)
            bessel = matern(r, nu + 1e-13)  # forces the generic branch
            assert np.max(np.abs(closed - bessel)) < 1e-9

    def test_monotone_decreasing(self):
        r = np.linspace(0.0, 6.0, 400)
        for nu in (0.5, 1.7, 2.5):
            v = matern(r, nu)
            assert np.all(np.diff(v) < 0)

    def test_invalid_smoothness(self):
        with pytest.raises(InvalidSmoothnessError):
            matern(1.0, 0.0)
        with pytest.raises(InvalidSmoothnessError):
            matern(1.0, -1.0)

    def test_negative_distance_rejected(self):
        with pytest.raises(InvalidInputError):
            matern(-0.1, 0.5)


class TestCovariance:
    def test_unit_diagonal(self):
        assert covariance((0.1, 0.2), (0.1, 0.2), ISO) == pytest.approx(1.0, abs=1e-14)

    def test_nugget_on_identical_points(self):
        m = CovarianceModel.isotropic(-0.5, nugget=0.25)
        assert covariance((0.1, 0.2), (0.1, 0.2), m) == pytest.approx(1.25, abs=1e-14)
        far = covariance((0.1, 0.2), (0.4, 0.2), m)
        assert far < 1.0

    def test_identity_pair_value(self):
        got = covariance((0.0, 0.0), (np.pi / 2, 0.0), UNIT)
        assert got == pytest.approx(np.exp(-np.sqrt(2.0)), abs=1e-14)

    def test_bounded_by_sigma_product(self, rng):
        for _ in range(100):
            model = random_section5_model(rng)
            a, b = random_sphere_points(rng, 2)
            assert abs(covariance(a, b, model)) <= model.sigma**2 + 1e-12

    def test_symmetry_exact(self, rng):
        for _ in range(20):
            model = random_section5_model(rng)
            a, b = random_sphere_points(rng, 2)
            assert covariance(a, b, model) == covariance(b, a, model)


class TestCovarianceMatrix:
    def test_single_location(self):
        C = covariance_matrix([(0.2, 0.3)], ISO)
        assert C.shape == (1, 1)
        assert C[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_matches_elementwise_recomputation(self, rng):
        pts = random_sphere_points(rng, 25)
        C = covariance_matrix(pts, ISO)
        for i in range(25):
            for j in range(25):
                assert C[i, j] == covariance(pts[i], pts[j], ISO)

    def test_general_model_cholesky_with_jitter(self, rng):
        pts = random_sphere_points(rng, 100)
        model = CovarianceModel.general([-0.5, -1.2, 1.44], [-3.2, -0.3, 1.44], 0.8, nugget=1e-10)
        C = covariance_matrix(pts, model)
        np.linalg.cholesky(C)  # must not raise

    def test_duplicates_rejected_without_nugget(self):
        pts = [(0.1, 0.1), (0.1, 0.1), (0.2, 0.2)]
        with pytest.raises(DuplicateLocationError):
            covariance_matrix(pts, ISO)
        with_nugget = CovarianceModel.isotropic(-0.5, nugget=1e-4)
        C = covariance_matrix(pts, with_nugget)
        np.linalg.cholesky(C)

    def test_positive_semidefinite_random_configs(self, rng):
        for _ in range(40):
            model = random_section5_model(rng)
            pts = random_sphere_points(rng, int(rng.integers(2, 61)))
            C = covariance_matrix(pts, model)
            min_eig = np.linalg.eigvalsh(C)[0]
            assert min_eig >= -1e-8 * np.max(np.diag(C))


class TestSubfamilyTheorems:
    def test_isotropy_under_common_rotation(self, rng):
        # equal constant scales: correlation depends on distance only
        for _ in range(40):
            a, b = random_sphere_points(rng, 2)
            base = nonstationary_correlation(a, b, ISO)
            Q = random_rotation(rng)
            a2 = to_spherical(Q @ to_euclidean(a))
            b2 = to_spherical(Q @ to_euclidean(b))
            assert nonstationary_correlation(a2, b2, ISO) == pytest.approx(base, abs=1e-10)

    def test_isotropy_ignores_kappa_when_scales_equal(self, rng):
        tilted = CovarianceModel(GammaField(-0.5), GammaField(-0.5), 0.8, 1.0, 0.5, 0.0)
        a, b = random_sphere_points(rng, 2)
        assert nonstationary_correlation(a, b, tilted) == pytest.approx(
            nonstationary_correlation(a, b, ISO), abs=1e-13
        )

    def test_axial_symmetry_under_longitude_shift(self, rng):
        model = CovarianceModel.axially_symmetric(-0.5, 1.44, -3.2, 1.44)
        for _ in range(40):
            a, b = random_sphere_points(rng, 2)
            base = covariance(a, b, model)
            delta = rng.uniform(0, 2 * np.pi)
            a2 = (a[0] + delta, a[1])
            b2 = (b[0] + delta, b[1])
            assert covariance(a2, b2, model) == pytest.approx(base, abs=1e-10)

    def test_general_model_breaks_axial_symmetry(self, rng):
        a, b = random_sphere_points(rng, 2)
        shifted = covariance((a[0] + 1.0, a[1]), (b[0] + 1.0, b[1]), GENERAL)
        assert shifted != pytest.approx(covariance(a, b, GENERAL), abs=1e-6)


class TestModelConstructors:
    def test_isotropic_mask(self):
        assert ISO.gamma1.beta0 == ISO.gamma2.beta0
        assert ISO.kappa == 0.0
        assert ModelKind(ISO.kind) is ModelKind.ISOTROPIC

    def test_isotropic_rejects_mismatch(self):
        with pytest.raises(InvalidInputError):
            CovarianceModel(GammaField(-0.5), GammaField(-0.6), 0.0, 1.0, 0.5, 0.0, ModelKind.ISOTROPIC)

    def test_axially_symmetric_rejects_longitude_terms(self):
        with pytest.raises(InvalidInputError):
            CovarianceModel(
                GammaField(-0.5, 0.3, 0.0), GammaField(-0.5), 0.0, 1.0, 0.5, 0.0, ModelKind.AXIALLY_SYMMETRIC
            )

    def test_kappa_range(self):
        with pytest.raises(InvalidInputError):
            CovarianceModel.general([-0.5, 0, 0], [-0.5, 0, 0], np.pi / 2)

    def test_json_round_trip(self):
        text = GENERAL.to_json()
        keys = set(json.loads(text))
        assert keys == {"beta1", "beta2", "kappa", "sigma", "nu", "nugget", "kind"}
        back = CovarianceModel.from_json(text)
        assert back == GENERAL

    def test_free_parameter_counts(self):
        assert ModelKind.ISOTROPIC.n_free == 1
        assert ModelKind.AXIALLY_SYMMETRIC.n_free == 4
        assert ModelKind.GENERAL.n_free == 7
