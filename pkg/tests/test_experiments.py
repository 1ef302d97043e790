"""Harness: builtin configs, seed derivation, replication, CSV, CLI."""

import dataclasses

import numpy as np
import pytest

import mislab
from mislab import (
    ExperimentConfig,
    MomentFunction,
    ProposalGrid,
    SummaryRow,
    builtin_example1,
    builtin_example2,
    run_cell,
    run_experiment,
    run_experiment_detailed,
    run_seed,
    run_single,
    write_csv,
    write_runs_csv,
)
from mislab.cli import main as cli_main


class TestBuiltinExample1:
    def test_proposal_grid_endpoints(self, ex1_cfg, ex1_ps):
        means = [p.mean for p in ex1_ps.proposals]
        assert means[0] == -8.0
        assert means[-1] == 8.0
        steps = np.diff(means)
        np.testing.assert_allclose(steps, 16.0 / 31.0, rtol=1e-12)
        assert all(p.variance == 3.0 for p in ex1_ps.proposals)

    def test_reference_mean(self, ex1_cfg):
        assert ex1_cfg.target.reference_mean == pytest.approx(1.0)
        assert ex1_cfg.target.normalizing_constant == 1.0

    def test_plan(self, ex1_cfg):
        assert ex1_cfg.schemes == ("s-mis", "dm", "p-dm", "h-dm")
        assert ex1_cfg.p_values == (16,)
        assert ex1_cfg.alpha == 1.0
        assert ex1_cfg.k_values == (1, 2, 3, 4, 5)
        assert ex1_cfg.moment.name == "identity"
        assert len(list(ex1_cfg.cells())) == 20


class TestBuiltinExample2:
    def test_reference_mean(self, ex2_cfg):
        assert ex2_cfg.target.reference_mean == pytest.approx(0.6)

    def test_plan(self, ex2_cfg):
        assert ex2_cfg.schemes == ("p-dm", "h-dm")
        assert ex2_cfg.p_values == (1, 2, 4, 8, 16, 32)
        assert [32 // p for p in ex2_cfg.p_values] == [32, 16, 8, 4, 2, 1]
        assert ex2_cfg.alpha == 0.1
        assert ex2_cfg.k_values == (1,)

    def test_proposals(self, ex2_ps):
        assert len(ex2_ps) == 32
        assert not ex2_ps.equal_variance_gaussians
        p = ex2_ps.proposals[0]
        assert (p.location, p.scale_sq, p.dof) == (-8.0, 3.0, 4.0)


class TestConfigValidation:
    def test_rejects_non_divisor_p(self):
        with pytest.raises(ValueError):
            dataclasses.replace(builtin_example1(), p_values=(5,))

    def test_rejects_unknown_scheme(self):
        with pytest.raises(ValueError):
            dataclasses.replace(builtin_example1(), schemes=("mixture-of-experts",))

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            dataclasses.replace(builtin_example1(), alpha=-0.1)

    def test_rejects_bad_runs(self):
        with pytest.raises(ValueError):
            dataclasses.replace(builtin_example1(), n_runs=0)

    def test_rejects_bad_interval(self):
        with pytest.raises(ValueError):
            ProposalGrid("gaussian", 4, (3.0, -3.0), 1.0)


class TestSeedDerivation:
    def test_pure_function_of_coordinates(self):
        a = run_seed(7, "dm", 1, 2, 13)
        b = run_seed(7, "dm", 1, 2, 13)
        assert a.entropy == b.entropy and a.spawn_key == b.spawn_key
        assert np.random.default_rng(a).uniform() == np.random.default_rng(
            b
        ).uniform()

    def test_distinct_runs_differ(self):
        a = np.random.default_rng(run_seed(7, "dm", 1, 2, 13)).uniform()
        b = np.random.default_rng(run_seed(7, "dm", 1, 2, 14)).uniform()
        assert a != b

    def test_run_single_reproducible(self, ex1_cfg, ex1_ps):
        args = (ex1_cfg.target, ex1_ps, "h-dm", 16, 1, 1.0, MomentFunction.identity())
        rec_a = run_single(*args, run_seed(ex1_cfg.base_seed, "h-dm", 16, 1, 5))
        rec_b = run_single(*args, run_seed(ex1_cfg.base_seed, "h-dm", 16, 1, 5))
        assert rec_a == rec_b


class TestRunExperiment:
    def test_row_count_and_order(self, ex1_cfg):
        cfg = dataclasses.replace(ex1_cfg, n_runs=2)
        rows = run_experiment(cfg)
        assert len(rows) == 20
        keys = [(r.scheme, r.P, r.k) for r in rows]
        assert keys == sorted(keys)
        for row in rows:
            assert row.L == row.k * 32
            assert row.M == 32 // row.P
            assert row.n_runs == 2
            assert row.base_seed == cfg.base_seed

    def test_bit_identical_reruns(self, tmp_path, ex1_cfg):
        cfg = dataclasses.replace(ex1_cfg, n_runs=3, k_values=(1,))
        path_a = tmp_path / "a.csv"
        path_b = tmp_path / "b.csv"
        write_csv(run_experiment(cfg), path_a)
        write_csv(run_experiment(cfg), path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_mse_decomposition_identity(self, ex1_cfg):
        cfg = dataclasses.replace(ex1_cfg, n_runs=300)
        rows, _ = run_experiment_detailed(
            dataclasses.replace(cfg, schemes=("dm",), k_values=(1,))
        )
        row = rows[0]
        for mse, var, bias_sq in [
            (
                row.mse_self_normalized,
                row.variance_self_normalized,
                row.bias_sq_self_normalized,
            ),
            (
                row.mse_unnormalized,
                row.variance_unnormalized,
                row.bias_sq_unnormalized,
            ),
        ]:
            assert abs(mse - (var + bias_sq)) <= 1e-10 * mse

    def test_eval_count_columns(self, ex1_cfg):
        cfg = dataclasses.replace(ex1_cfg, n_runs=2, k_values=(1,))
        rows = run_experiment(cfg)
        by_scheme = {r.scheme: r for r in rows}
        assert by_scheme["s-mis"].mean_proposal_evals == 32.0
        assert by_scheme["dm"].mean_proposal_evals == 1024.0
        assert by_scheme["p-dm"].mean_proposal_evals == 64.0
        assert by_scheme["h-dm"].mean_proposal_evals == 64.0


class TestCsvOutput:
    def test_single_row_two_lines(self, tmp_path, ex1_cfg):
        cfg = dataclasses.replace(
            ex1_cfg, n_runs=2, schemes=("dm",), k_values=(1,)
        )
        path = tmp_path / "one.csv"
        write_csv(run_experiment(cfg), path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2

    def test_field_count_and_header(self, tmp_path, ex1_cfg):
        cfg = dataclasses.replace(ex1_cfg, n_runs=2, k_values=(1,))
        path = tmp_path / "rows.csv"
        write_csv(run_experiment(cfg), path)
        lines = path.read_text().splitlines()
        names = [f.name for f in dataclasses.fields(SummaryRow)]
        assert lines[0] == ",".join(names)
        assert len(names) == 17
        for line in lines[1:]:
            assert len(line.split(",")) == 17

    def test_round_trip_exact(self, tmp_path, ex1_cfg):
        cfg = dataclasses.replace(ex1_cfg, n_runs=3, k_values=(2,))
        rows = run_experiment(cfg)
        path = tmp_path / "rt.csv"
        write_csv(rows, path)
        lines = path.read_text().splitlines()
        names = lines[0].split(",")
        for row, line in zip(rows, lines[1:]):
            for name, cell in zip(names, line.split(",")):
                value = getattr(row, name)
                if isinstance(value, float):
                    assert float(cell) == value  # 17 significant digits
                elif isinstance(value, int):
                    assert int(cell) == value
                else:
                    assert cell == value

    def test_lf_newlines(self, tmp_path, ex1_cfg):
        cfg = dataclasses.replace(
            ex1_cfg, n_runs=2, schemes=("dm",), k_values=(1,)
        )
        path = tmp_path / "lf.csv"
        write_csv(run_experiment(cfg), path)
        raw = path.read_bytes()
        assert b"\r" not in raw

    def test_rejects_empty(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv([], tmp_path / "empty.csv")

    def test_runs_dump(self, tmp_path, ex1_cfg):
        cfg = dataclasses.replace(
            ex1_cfg, n_runs=2, schemes=("dm",), k_values=(1,)
        )
        _, runs = run_experiment_detailed(cfg)
        path = tmp_path / "runs.csv"
        write_runs_csv(runs, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3  # header + 2 runs
        assert lines[0].startswith("scheme,P,k,run_index,")


EX1_TOML = """
name = "ex1-clone"

[target]
family = "gaussian"
weights = [0.5, 0.5]
locations = [-3.0, 5.0]
scale_sq = [1.0, 1.0]

[proposals]
family = "gaussian"
count = 32
interval = [-8.0, 8.0]
scale_sq = 3.0

[run]
schemes = ["s-mis", "dm", "p-dm", "h-dm"]
p_values = [16]
alpha = 1.0
k_values = [1, 2, 3, 4, 5]
n_runs = 2
base_seed = 12345
moment = "identity"
"""

EX2_TOML = """
name = "t-target"

[target]
family = "student-t"
weights = [0.2, 0.2, 0.2, 0.2, 0.2]
locations = [-3.0, -1.0, 0.0, 3.0, 4.0]
scale_sq = [1.0, 1.0, 1.0, 1.0, 1.0]
dof = [5.0, 5.0, 5.0, 5.0, 5.0]

[proposals]
family = "student-t"
count = 8
interval = [-8.0, 8.0]
scale_sq = 3.0
dof = 4.0

[run]
schemes = ["p-dm"]
p_values = [2]
alpha = 0.1
k_values = [1]
n_runs = 2
"""


class TestLoadConfig:
    def test_gaussian_config_matches_builtin(self, tmp_path, ex1_cfg):
        path = tmp_path / "ex1.toml"
        path.write_text(EX1_TOML)
        loaded = mislab.load_config(path)
        builtin = dataclasses.replace(ex1_cfg, n_runs=2)
        assert run_experiment(loaded) == run_experiment(builtin)

    def test_student_t_config(self, tmp_path):
        path = tmp_path / "t.toml"
        path.write_text(EX2_TOML)
        cfg = mislab.load_config(path)
        assert cfg.target.reference_mean == pytest.approx(0.6)
        assert cfg.proposals.dof == 4.0
        rows = run_experiment(cfg)
        assert len(rows) == 1 and rows[0].scheme == "p-dm"


class TestCli:
    def test_run_writes_outputs(self, tmp_path, capsys):
        out = tmp_path / "summary.csv"
        dump = tmp_path / "runs.csv"
        code = cli_main(
            [
                "run",
                "--example",
                "1",
                "--runs",
                "2",
                "--schemes",
                "dm,s-mis",
                "--out",
                str(out),
                "--dump-runs",
                str(dump),
            ]
        )
        assert code == 0
        assert out.exists() and dump.exists()
        table = capsys.readouterr().out
        assert "mse_self_normalized" in table

    def test_run_with_config_file(self, tmp_path, capsys):
        path = tmp_path / "cfg.toml"
        path.write_text(EX2_TOML)
        assert cli_main(["run", "--config", str(path)]) == 0
        assert "p-dm" in capsys.readouterr().out

    def test_scheme_override_changes_rows(self, tmp_path, capsys):
        code = cli_main(
            ["run", "--example", "1", "--runs", "2", "--schemes", "dm", "--p", "8"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "s-mis" not in out

    def test_validate_example1(self, capsys):
        assert cli_main(["validate", "--example", "1"]) == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out and "[FAIL]" not in out
