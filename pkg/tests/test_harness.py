import csv
import json

import numpy as np
import pytest
from scipy import stats

from coldstart_rl import harness
from coldstart_rl.agent import Variant
from coldstart_rl.errors import ValidationError
from coldstart_rl.harness import (
    Cell,
    ResultsTable,
    config_from_mapping,
    emit_tables,
    parse_config_file,
    run_evaluation,
    run_sweep,
    run_training,
    significance_stars,
    t_test_matrix,
)


TINY_CONFIG_TEXT = """
# desk-scale experiment
synthetic.num_users = 60
synthetic.num_items = 24
synthetic.num_clusters = 3
synthetic.interactions_per_user = 8
synthetic.noise_rate = 0.1
synthetic.return_rate = 0.1
dataset.cold_fraction = 0.3
dataset.seed = 0

mf.latent_factors = 4
mf.iterations = 15

agent.buffer_capacity = 64
agent.batch_size = 16

env.pool_size = 12
experiment.display_sizes = 3,5
experiment.episodes = 6
experiment.variants = dqn
experiment.strategies = popularity,entropy,random
experiment.seeds = 0
"""


@pytest.fixture
def tiny_config(tmp_path):
    cfg_path = tmp_path / "exp.cfg"
    cfg_path.write_text(TINY_CONFIG_TEXT + f"experiment.out = {tmp_path / 'out'}\n")
    return harness.load_config(cfg_path)


class TestConfigParsing:
    def test_key_value_with_comments(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("a.b = 1  # trailing comment\n\n# full comment\nc.d = x\n")
        assert parse_config_file(path) == {"a.b": "1", "c.d": "x"}

    def test_missing_equals_is_error(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("just a line\n")
        with pytest.raises(ValidationError):
            parse_config_file(path)

    def test_defaults_follow_reference_settings(self):
        cfg = config_from_mapping({"dataset.path": "x.csv"})
        assert cfg.mf.latent_factors == 10
        assert cfg.mf.learning_rate == 0.001
        assert cfg.mf.regularization == 0.01
        assert cfg.mf.iterations == 100
        assert cfg.agent.gamma == 0.99
        assert cfg.agent.learning_rate == 4e-4
        assert cfg.agent.hidden == (64, 32)
        assert cfg.agent.buffer_capacity == 100
        assert cfg.agent.batch_size == 32
        assert cfg.agent.epsilon_start == 1.0
        assert cfg.agent.epsilon_end == 0.01
        assert cfg.agent.target_update_every == 100
        assert cfg.episodes == 2000
        assert cfg.display_sizes == (10, 25, 50, 100)
        assert cfg.pool_size == 200

    def test_single_strategy_shorthand(self):
        cfg = config_from_mapping(
            {"dataset.path": "x.csv", "strategy": "popgini", "w1": "0.5", "w2": "2.0"}
        )
        assert cfg.strategies == ("popgini",)
        assert cfg.strategy_w1 == 0.5
        assert cfg.strategy_w2 == 2.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            config_from_mapping({"dataset.path": "x", "nope.key": "1"})

    def test_both_sources_rejected(self):
        with pytest.raises(ValidationError):
            config_from_mapping(
                {"dataset.path": "x", "synthetic.num_users": "5",
                 "synthetic.num_items": "5"}
            )

    def test_display_size_bounds(self):
        with pytest.raises(ValidationError):
            config_from_mapping(
                {"dataset.path": "x", "experiment.display_sizes": "10,500"}
            )

    def test_env_flags(self):
        cfg = config_from_mapping(
            {"dataset.path": "x", "env.full_retrain": "true",
             "env.terminal_reward": "yes", "env.rmse_floor": "0.01"}
        )
        assert cfg.full_retrain is True
        assert cfg.terminal_reward is True
        assert cfg.rmse_floor == 0.01

    def test_epsilon_decay_resolution(self):
        cfg = config_from_mapping({"dataset.path": "x"})
        acfg = harness.agent_config_for(cfg, "dqn", 10)
        assert acfg.epsilon_decay_steps == int(0.8 * 2000 * 10)
        cfg2 = config_from_mapping(
            {"dataset.path": "x", "agent.epsilon_decay_steps": "123"}
        )
        assert harness.agent_config_for(cfg2, "double", 10).epsilon_decay_steps == 123
        assert harness.agent_config_for(cfg2, "double", 10).variant is Variant.DOUBLE


class TestTraining:
    def test_single_episode_step_count(self, tiny_config):
        import dataclasses

        cfg = dataclasses.replace(tiny_config, episodes=1, display_sizes=(3,))
        ckpt = run_training(cfg, "dqn", 3, 0)
        agent = harness.QAgent.load(ckpt)
        assert agent.global_step == 3

    def test_checkpoint_deterministic(self, tiny_config, tmp_path):
        import dataclasses

        a = run_training(tiny_config, "dqn", 3, 0)
        moved = tmp_path / "first"
        moved.mkdir()
        for suffix in (".meta.json", ".online.net", ".target.net"):
            (moved / ("ckpt" + suffix)).write_bytes(open(a + suffix, "rb").read())
        b = run_training(tiny_config, "dqn", 3, 0)
        for suffix in (".online.net", ".target.net"):
            assert open(b + suffix, "rb").read() == (moved / ("ckpt" + suffix)).read_bytes()

    def test_full_retrain_mode_trains(self, tiny_config):
        import dataclasses

        cfg = dataclasses.replace(
            tiny_config,
            full_retrain=True,
            episodes=1,
            display_sizes=(2,),
            mf=dataclasses.replace(tiny_config.mf, iterations=2),
            out_dir=tiny_config.out_dir + "-retrain",
        )
        ckpt = run_training(cfg, "dqn", 2, 0)
        assert harness.QAgent.load(ckpt).global_step == 2

    def test_sync_count_arithmetic(self, tiny_config):
        import dataclasses

        # 6 episodes at k=5 is 30 steps; with target_update_every=10 the
        # online net is copied at steps 10, 20 and 30
        cfg = dataclasses.replace(
            tiny_config,
            agent=dataclasses.replace(tiny_config.agent, target_update_every=10),
        )
        ckpt = run_training(cfg, "dqn", 5, 0)
        agent = harness.QAgent.load(ckpt)
        assert agent.global_step == 30


class TestEvaluation:
    def test_grid_shape_and_missing_cells(self, tiny_config):
        # no training has happened: agent cells are missing, strategy cells full
        results = run_evaluation(tiny_config)
        assert results.rows == ("dqn", "popularity", "entropy", "random")
        for k in (3, 5):
            assert results.cell("dqn", k).missing
            assert not results.cell("popularity", k).missing
        assert results.row_mean("dqn") is None

    def test_mean_column_is_arithmetic_mean(self, tiny_config):
        results = run_evaluation(tiny_config)
        for row in ("popularity", "entropy", "random"):
            means = [results.cell(row, k).mean for k in (3, 5)]
            assert results.row_mean(row) == pytest.approx(np.mean(means), abs=1e-9)

    def test_results_json_round_trip(self, tiny_config):
        results = run_evaluation(tiny_config)
        clone = ResultsTable.from_jsonable(results.to_jsonable())
        assert clone.rows == results.rows
        for key, cell in results.cells.items():
            assert clone.cells[key].samples == cell.samples


class TestTTest:
    def make_table(self, samples_by_row):
        sizes = tuple(range(len(next(iter(samples_by_row.values())))))
        table = ResultsTable(sizes, tuple(samples_by_row))
        for row, values in samples_by_row.items():
            for k, v in zip(sizes, values):
                table.cells[(row, k)] = Cell((float(v),))
        return table

    def test_self_comparison_is_half(self):
        table = self.make_table({"a": [0.1, 0.2, 0.3, 0.4], "b": [0.1, 0.2, 0.3, 0.4]})
        grid = t_test_matrix(table)
        assert grid.p[0, 0] == 0.5
        assert grid.p[1, 1] == 0.5

    def test_complement_property(self):
        rng = np.random.default_rng(0)
        table = self.make_table(
            {name: rng.uniform(0.2, 0.8, size=5).tolist() for name in "abcd"}
        )
        grid = t_test_matrix(table)
        n = len(grid.rows)
        for a in range(n):
            for b in range(n):
                assert grid.p[a, b] + grid.p[b, a] == 1.0

    def test_separated_samples_significant(self):
        table = self.make_table(
            {"low": [0.1, 0.1001, 0.0999, 0.1], "high": [0.9, 0.9001, 0.8999, 0.9]}
        )
        grid = t_test_matrix(table)
        assert grid.p[0, 1] < 0.001
        assert grid.p[1, 0] > 0.999

    def test_matches_scipy_pooled_ttest(self):
        rng = np.random.default_rng(4)
        xs = rng.normal(0.4, 0.05, size=6)
        ys = rng.normal(0.5, 0.08, size=6)
        table = self.make_table({"x": xs.tolist(), "y": ys.tolist()})
        grid = t_test_matrix(table)
        expected = stats.ttest_ind(xs, ys, equal_var=True, alternative="less").pvalue
        assert grid.p[0, 1] == pytest.approx(expected, abs=1e-12)

    def test_zero_variance_flagged(self):
        table = self.make_table({"a": [0.1, 0.1, 0.1], "b": [0.2, 0.2, 0.2]})
        grid = t_test_matrix(table)
        assert grid.p[0, 1] == 0.5
        assert grid.degenerate[0, 1]

    def test_needs_two_samples(self):
        table = ResultsTable((10,), ("a",))
        table.cells[("a", 10)] = Cell((0.5,))
        with pytest.raises(ValidationError):
            t_test_matrix(table)

    def test_per_user_mode_uses_raw_samples(self):
        sizes = (10, 25)
        table = ResultsTable(sizes, ("a", "b"))
        table.cells[("a", 10)] = Cell((0.1, 0.2, 0.3))
        table.cells[("a", 25)] = Cell((0.2, 0.25))
        table.cells[("b", 10)] = Cell((0.5, 0.6))
        table.cells[("b", 25)] = Cell((0.55, 0.62, 0.7))
        grid = t_test_matrix(table, per_user=True)
        xs = [0.1, 0.2, 0.3, 0.2, 0.25]
        ys = [0.5, 0.6, 0.55, 0.62, 0.7]
        expected = stats.ttest_ind(xs, ys, equal_var=True, alternative="less").pvalue
        assert grid.p[0, 1] == pytest.approx(expected, abs=1e-12)


class TestStars:
    def test_thresholds(self):
        assert significance_stars(0.2) == ""
        assert significance_stars(0.04) == "**"
        assert significance_stars(0.005) == "***"
        assert significance_stars(0.09) == "*"
        # boundary values are not starred (strict inequalities)
        assert significance_stars(0.10) == ""
        assert significance_stars(0.05) == "*"
        assert significance_stars(0.01) == "**"


class TestEmission:
    def make_results(self):
        table = ResultsTable((10, 25), ("popularity", "random"))
        table.cells[("popularity", 10)] = Cell((0.4, 0.5))
        table.cells[("popularity", 25)] = Cell((0.3, 0.35))
        table.cells[("random", 10)] = Cell((0.6, 0.62))
        table.cells[("random", 25)] = Cell((0.5, 0.52))
        return table

    def test_csv_round_trip_six_decimals(self, tmp_path):
        results = self.make_results()
        grid = t_test_matrix(results)
        paths = emit_tables(results, grid, tmp_path)
        with open(paths["rmse_csv"]) as fh:
            rows = list(csv.DictReader(fh))
        for row in rows:
            key = {"Popularity": "popularity", "Random": "random"}[row["strategy"]]
            for k in (10, 25):
                assert float(row[str(k)]) == pytest.approx(
                    results.cell(key, k).mean, abs=5e-7
                )
            assert float(row["mean"]) == pytest.approx(results.row_mean(key), abs=5e-7)

    def test_markdown_bolds_column_minimum(self, tmp_path):
        results = self.make_results()
        paths = emit_tables(results, t_test_matrix(results), tmp_path)
        text = open(paths["rmse_md"]).read()
        lines = [l for l in text.splitlines() if l.startswith("| Popularity")]
        assert "**0.450**" in lines[0]  # popularity wins column 10
        assert "**0.325**" in lines[0]  # and column 25
        random_line = [l for l in text.splitlines() if l.startswith("| Random")][0]
        assert "**" not in random_line

    def test_pvalues_csv_diagonal_and_complement(self, tmp_path):
        results = self.make_results()
        paths = emit_tables(results, t_test_matrix(results), tmp_path)
        with open(paths["pvalues_csv"]) as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        matrix = np.array([[float(x) for x in row[1:]] for row in body])
        assert matrix[0, 0] == 0.5 and matrix[1, 1] == 0.5
        assert matrix[0, 1] + matrix[1, 0] == pytest.approx(1.0, abs=1e-6)

    def test_star_annotations_in_markdown(self, tmp_path):
        results = self.make_results()
        grid = t_test_matrix(results)
        paths = emit_tables(results, grid, tmp_path)
        text = open(paths["pvalues_md"]).read()
        p = grid.p[0, 1]
        assert f"{p:.3f}{significance_stars(p)}" in text

    def test_manifest_contents(self, tmp_path, tiny_config):
        results = self.make_results()
        paths = emit_tables(results, t_test_matrix(results), tmp_path, tiny_config, 1.5)
        manifest = json.load(open(paths["manifest"]))
        assert manifest["wall_clock_s"] == 1.5
        assert manifest["seeds"] == [0]
        assert manifest["config"]["episodes"] == tiny_config.episodes
        assert "git_describe" in manifest


class TestSweep:
    def test_reproducible_byte_identical(self, tiny_config, tmp_path):
        import dataclasses

        cfg_a = dataclasses.replace(tiny_config, out_dir=str(tmp_path / "a"))
        cfg_b = dataclasses.replace(tiny_config, out_dir=str(tmp_path / "b"))
        paths_a = run_sweep(cfg_a)
        paths_b = run_sweep(cfg_b)
        assert open(paths_a["rmse_csv"], "rb").read() == open(paths_b["rmse_csv"], "rb").read()
        assert open(paths_a["pvalues_csv"], "rb").read() == open(paths_b["pvalues_csv"], "rb").read()

    def test_sweep_fills_agent_cells(self, tiny_config):
        run_sweep(tiny_config)
        results = run_evaluation(tiny_config)
        for k in (3, 5):
            assert not results.cell("dqn", k).missing

    def test_parallel_matches_serial(self, tiny_config, tmp_path, monkeypatch):
        import dataclasses

        serial = dataclasses.replace(tiny_config, out_dir=str(tmp_path / "serial"))
        parallel = dataclasses.replace(tiny_config, out_dir=str(tmp_path / "par"))
        monkeypatch.delenv("COLDSTART_RL_THREADS", raising=False)
        paths_s = run_sweep(serial)
        monkeypatch.setenv("COLDSTART_RL_THREADS", "2")
        paths_p = run_sweep(parallel)
        assert open(paths_s["rmse_csv"], "rb").read() == open(paths_p["rmse_csv"], "rb").read()
