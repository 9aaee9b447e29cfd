import math

import numpy as np
import pytest

from hpopt.bench import (
    BRANIN_MINIMUM,
    RunConfig,
    RunFailure,
    aggregate,
    branin,
    branin_objective,
    make_noise_function,
    noise_eval,
    noise_objective,
    run_comparison,
)
from hpopt.errors import ConfigurationError

FAST_BAYES = {"gp": {"restarts": 2}, "acq_opt": {"warmup_samples": 200, "restarts": 2}}


class TestBranin:
    def test_minimum(self):
        assert branin(math.pi, 2.275) == pytest.approx(0.397887, abs=1e-6)
        assert BRANIN_MINIMUM == branin(math.pi, 2.275)

    def test_origin(self):
        expected = 36 + 10 * (1 - 1 / (8 * math.pi)) + 10
        assert branin(0.0, 0.0) == pytest.approx(expected, abs=1e-12)
        assert branin(0.0, 0.0) == pytest.approx(55.602113, abs=1e-6)

    def test_other_minima(self):
        assert abs(branin(-math.pi, 12.275) - branin(math.pi, 2.275)) <= 1e-9
        assert abs(branin(9.42478, 2.475) - BRANIN_MINIMUM) <= 1e-5

    def test_objective_by_name(self):
        obj = branin_objective()
        assert obj({"x": math.pi, "y": 2.275}) == branin(math.pi, 2.275)
        defs = obj.param_defs()
        assert (defs["x"].low, defs["x"].high, defs["y"].low, defs["y"].high) == (-5.0, 10.0, 0.0, 15.0)


class TestNoiseFunction:
    def test_grid_independent_of_variance(self):
        a = make_noise_function(2, 5, seed=3, smoothing_variance=0.1)
        b = make_noise_function(2, 5, seed=3, smoothing_variance=1e-4)
        np.testing.assert_array_equal(a.grid_values, b.grid_values)

    def test_seed_changes_grid(self):
        a = make_noise_function(2, 5, seed=3)
        b = make_noise_function(2, 5, seed=4)
        assert not np.array_equal(a.grid_values, b.grid_values)

    def test_one_dimensional_grid(self):
        f = make_noise_function(1, 4, seed=9)
        assert f.grid_values.shape == (4,)
        assert np.all((f.grid_values >= 0) & (f.grid_values <= 1))

    def test_defaults(self):
        assert make_noise_function(2).grid_values.shape == (20, 20)
        f = make_noise_function(3)
        assert f.grid_values.shape == (8, 8, 8) and f.neighbor_cutoff == 16
        assert make_noise_function(6, 3).neighbor_cutoff == 64

    def test_delta_limit(self):
        f = make_noise_function(2, 5, seed=1, smoothing_variance=1e-12)
        node = (2, 3)
        assert noise_eval(f, [node[0] / 4, node[1] / 4]) == pytest.approx(f.grid_values[node], abs=1e-9)

    def test_flat_limit(self):
        f = make_noise_function(2, 6, seed=1, smoothing_variance=1e6)
        p = np.array([0.37, 0.61])
        d2 = ((f.nodes - p) ** 2).sum(1)
        nearest = np.argsort(d2, kind="stable")[:f.neighbor_cutoff]
        assert noise_eval(f, p) == pytest.approx(f.grid_values.ravel()[nearest].mean(), abs=1e-6)

    def test_equidistant_average(self):
        f = make_noise_function(1, 2, seed=5, smoothing_variance=0.3, neighbor_cutoff=2)
        assert noise_eval(f, [0.5]) == pytest.approx(f.grid_values.mean(), abs=1e-15)

    def test_bounded(self, rng):
        for var in (1e-6, 1e-2, 10.0):
            f = make_noise_function(3, seed=2, smoothing_variance=var)
            vals = [noise_eval(f, p) for p in rng.random((200, 3))]
            assert min(vals) >= 0.0 and max(vals) <= 1.0

    @pytest.mark.parametrize("kw", [{"n": 0}, {"n": 2, "grid_points_per_dim": 1},
                                    {"n": 8, "grid_points_per_dim": 8},
                                    {"n": 2, "smoothing_variance": 0.0}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            make_noise_function(**kw)

    def test_wrong_point_size(self):
        with pytest.raises(ConfigurationError):
            make_noise_function(2, 4)([0.5])

    def test_objective(self):
        obj = noise_objective(3, seed=0, smoothing_variance=0.01)
        assert list(obj.param_defs()) == ["x0", "x1", "x2"]
        assert 0.0 <= obj({"x0": 0.1, "x1": 0.5, "x2": 0.9}) <= 1.0


class TestRunConfig:
    @pytest.mark.parametrize("kw", [
        {"objective": "rosenbrock"}, {"optimizers": ()}, {"optimizers": ("random", "grid")},
        {"optimizers": ("random", "random")}, {"steps": 0}, {"seeds": 0},
        {"steps": 5, "shared_initial": 10}, {"shared_initial": -1},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ConfigurationError):
            RunConfig(**kw)


class TestRunComparison:
    def test_random_only(self, tmp_path):
        res = run_comparison(RunConfig(optimizers=("random",), steps=12, shared_initial=0, out_dir=str(tmp_path)))
        seed = res.per_seed[0]
        assert len(seed.values["random"]) == 12
        best = seed.best["random"]
        assert len(best) == 12 and all(b <= a for a, b in zip(best, best[1:]))
        assert (tmp_path / "seed_0" / "random" / "results.csv").exists()
        assert (tmp_path / "aggregate.csv").read_text().count("\n") == 13

    def test_shared_bootstrap(self):
        res = run_comparison(RunConfig(steps=10, shared_initial=10, bayes_params=FAST_BAYES))
        s = res.per_seed[0]
        assert s.values["random"] == s.values["bayes"]
        assert s.best["random"] == s.best["bayes"]

    def test_deterministic_files(self, tmp_path):
        cfg = dict(objective="noise", noise_dim=2, steps=12, seeds=2, shared_initial=5,
                   bayes_params=FAST_BAYES)
        a = run_comparison(RunConfig(out_dir=str(tmp_path / "a"), **cfg))
        b = run_comparison(RunConfig(out_dir=str(tmp_path / "b"), **cfg))
        rel_a = {p.relative_to(tmp_path / "a"): p.read_bytes() for p in a.files}
        rel_b = {p.relative_to(tmp_path / "b"): p.read_bytes() for p in b.files}
        assert rel_a == rel_b
        assert len(rel_a) == 2 * 4 + 2

    def test_aggregate_band(self):
        res = run_comparison(RunConfig(optimizers=("random",), steps=5, seeds=8, shared_initial=0))
        agg = res.aggregate["random"]
        finals = res.final_best("random")
        assert agg["mean"][-1] == pytest.approx(finals.mean())
        assert agg["low"][-1] == pytest.approx(np.percentile(finals, 12.5))
        assert agg["high"][-1] == pytest.approx(np.percentile(finals, 87.5))
        assert all(lo <= m <= hi for lo, m, hi in zip(agg["low"], agg["mean"], agg["high"]))
        assert aggregate(res.per_seed, ["random"]) == res.aggregate

    def test_failure_marked(self, tmp_path, monkeypatch):
        import hpopt.bench as bench

        def boom(config, seed):
            raise ValueError("objective exploded")
        monkeypatch.setattr(bench, "build_objective", boom)
        with pytest.raises(RunFailure):
            run_comparison(RunConfig(optimizers=("random",), steps=2, shared_initial=0, out_dir=str(tmp_path)))
        assert "objective exploded" in (tmp_path / "seed_0" / "FAILED").read_text()
