import numpy as np
import pytest

from spheregp.errors import InvalidInputError
from spheregp.scoring import PredictiveMixture, crps_mixture, energy_score, mae, rmse, score_record

from oracles import mc_crps, mc_energy


def single(mu, v):
    return PredictiveMixture([mu], [v], [1.0])


class TestPointScores:
    def test_perfect_predictions(self):
        assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_symmetric_errors(self):
        assert mae([1.0, -1.0], [0.0, 0.0]) == 1.0
        assert rmse([1.0, -1.0], [0.0, 0.0]) == 1.0

    def test_uneven_errors(self):
        assert mae([0.0, 2.0], [0.0, 0.0]) == 1.0
        assert rmse([0.0, 2.0], [0.0, 0.0]) == pytest.approx(np.sqrt(2.0))

    def test_rmse_dominates_mae(self, rng):
        for _ in range(20):
            p = rng.standard_normal(30)
            t = rng.standard_normal(30)
            assert rmse(p, t) >= mae(p, t) - 1e-15

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            mae([], [])
        with pytest.raises(InvalidInputError):
            rmse([1.0], [1.0, 2.0])


class TestCrpsMixture:
    def test_standard_normal_at_zero(self):
        # closed form (sqrt(2) - 1) / sqrt(pi)
        assert crps_mixture(single(0.0, 1.0), 0.0) == pytest.approx(0.23369497725510915, abs=1e-14)

    def test_deterministic_limit(self):
        assert crps_mixture(single(1.5, 1e-18), 0.25) == pytest.approx(1.25, abs=1e-8)

    def test_duplicate_components_degenerate(self):
        one = crps_mixture(single(0.3, 0.8), 1.1)
        two = crps_mixture(PredictiveMixture([0.3, 0.3], [0.8, 0.8], [0.5, 0.5]), 1.1)
        assert two == pytest.approx(one, abs=1e-14)

    def test_against_monte_carlo(self, rng):
        for _ in range(20):
            k = int(rng.integers(1, 5))
            mix = PredictiveMixture(
                rng.normal(0, 2, k), rng.uniform(0.1, 2.0, k), np.full(k, 1.0 / k)
            )
            y = float(rng.normal(0, 2))
            est, se = mc_crps(mix, y, 100_000, rng)
            assert abs(crps_mixture(mix, y) - est) < 3 * se

    def test_minimized_at_median_symmetric(self):
        mix = single(0.7, 1.3)
        ys = np.linspace(-3, 4, 141)
        vals = [crps_mixture(mix, y) for y in ys]
        assert ys[int(np.argmin(vals))] == pytest.approx(0.7, abs=0.06)

    def test_invalid_mixture(self):
        with pytest.raises(InvalidInputError):
            PredictiveMixture([0.0], [0.0], [1.0])
        with pytest.raises(InvalidInputError):
            PredictiveMixture([0.0, 1.0], [1.0, 1.0], [0.6, 0.6])


class TestEnergyScore:
    def test_zero_when_samples_equal_truth(self):
        y = np.array([1.0, -2.0, 0.5])
        samples = np.tile(y, (7, 1))
        assert energy_score(samples, y) == 0.0

    def test_single_sample_is_distance(self):
        x = np.array([[3.0, 4.0]])
        assert energy_score(x, [0.0, 0.0]) == pytest.approx(5.0)

    def test_order_invariance_exact(self, rng):
        samples = rng.standard_normal((40, 3))
        y = rng.standard_normal(3)
        shuffled = samples[rng.permutation(40)]
        assert energy_score(samples, y) == energy_score(shuffled, y)

    def test_standard_normal_against_oracle(self, rng):
        samples = rng.standard_normal((10_000, 2))
        got = energy_score(samples, np.zeros(2))
        est, _ = mc_energy(lambda r, n: r.standard_normal((n, 2)), np.zeros(2), 1_000_000, rng)
        assert abs(got - est) / est < 0.02

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            energy_score(np.zeros((3, 2)), np.zeros(3))


class TestScoreRecord:
    def test_keys_and_aggregation(self, rng):
        mixes = [single(0.0, 1.0), single(1.0, 0.5)]
        y = [0.0, 1.0]
        samples = rng.standard_normal((50, 2))
        rec = score_record(mixes, y, samples, seed=7)
        assert set(rec) == {"mae", "rmse", "crps", "energy", "n_test", "seed"}
        assert rec["mae"] == 0.0 and rec["rmse"] == 0.0
        assert rec["n_test"] == 2 and rec["seed"] == 7
        expected_crps = np.mean([crps_mixture(m, t) for m, t in zip(mixes, y)])
        assert rec["crps"] == pytest.approx(expected_crps)
