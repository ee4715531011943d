import json
import os
from pathlib import Path

import numpy as np
import pytest

from fiberq.config import ConfigError, ExperimentConfig, load_config
from fiberq.harness import (METRICS_HEADER, emit_figure_data, run_experiment,
                            run_power_point)
from fiberq.pipeline import (IndependenceError, simulate_frame_pair,
                             simulate_streams)

TOY_TOML = """
[link]
preset = "ssmf_5x100"
n_spans = 1
length_km = 5

[signal]
modulation_orders = [16]
launch_powers_dbm = [{powers}]
frame_symbols = 32896
guard_symbols = 64

[equalizer]
trunk = "mlp"
head = "{head}"
n_neighbors = 2
mlp_hidden = [16, 8, 8]
minibatch = 256
learning_rates = [{lrs}]
max_epochs = 3
patience = 2

[seeds]
data = 11
init = 22
noise = 33
shuffle = 44

[output]
dir = "{out}"
"""


def write_toy_config(tmp_path, powers="0.0", head="both", lrs="1e-3",
                     name="toy.toml"):
    out = (tmp_path / "run").as_posix()
    path = tmp_path / name
    path.write_text(TOY_TOML.format(powers=powers, head=head, lrs=lrs,
                                    out=out))
    return path


class TestConfig:
    def test_load_round_trip(self, tmp_path):
        config = load_config(write_toy_config(tmp_path))
        assert config.link_preset == "ssmf_5x100"
        assert config.link_overrides == {"n_spans": 1, "length_km": 5}
        assert config.heads == ("regression", "classification")
        assert config.n_neighbors == 2
        assert config.seed_data == 11

    def test_missing_file_is_config_error(self):
        with pytest.raises(ConfigError):
            load_config("does_not_exist.toml")

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[signal]\nbogus_key_hz = 3\n[seeds]\n"
                        "data=1\ninit=2\nnoise=3\nshuffle=4\n"
                        "[link]\npreset='ssmf_5x100'\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_seeds_must_be_explicit(self, tmp_path):
        path = tmp_path / "noseeds.toml"
        path.write_text("[link]\npreset = 'ssmf_5x100'\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_desk_scale_overlay(self, tmp_path):
        config = load_config(write_toy_config(tmp_path), desk_scale=True)
        assert config.max_epochs == 300
        assert config.patience == 30
        assert config.lstm_hidden == 64

    def test_seed_override(self, tmp_path):
        config = load_config(write_toy_config(tmp_path),
                             seed_overrides={"data": 999})
        assert config.seed_data == 999
        with pytest.raises(ConfigError):
            load_config(write_toy_config(tmp_path),
                        seed_overrides={"bogus": 1})

    def test_hash_stable_under_reordering(self, tmp_path):
        a = load_config(write_toy_config(tmp_path))
        reordered = TOY_TOML.format(powers="0.0", head="both", lrs="1e-3",
                                    out=(tmp_path / "run").as_posix())
        # move the [seeds] section to the top
        lines = reordered.strip().split("\n")
        seeds = "\n".join(lines[-8:-2])
        rest = "\n".join(lines[:-8] + lines[-2:])
        path = tmp_path / "reordered.toml"
        path.write_text(seeds + "\n" + rest)
        b = load_config(path)
        assert a.config_sha() == b.config_sha()

    def test_default_neighbors_follow_preset(self):
        config = ExperimentConfig(link_preset="twc_9x50", seed_data=1,
                                  seed_init=2, seed_noise=3, seed_shuffle=4)
        assert config.n_neighbors == 20   # M = 41


class TestPipeline:
    def test_frame_pair_alignment(self, tmp_path):
        config = load_config(write_toy_config(tmp_path))
        rx, tx = simulate_frame_pair(config, 16, 0.0, "train", 0)
        assert rx.n_symbols == tx.n_symbols == 32896 - 2 * 64
        # at 0 dBm over 5 km the channel is clean: symbols land close
        err = np.mean(np.abs(rx.syms_x - tx.syms_x) ** 2)
        assert err < 0.05

    def test_train_test_streams_independent(self, tmp_path):
        config = load_config(write_toy_config(tmp_path))
        streams = simulate_streams(config, 16, 0.0)
        assert streams.independence <= 0.02

    def test_same_data_seed_collision_aborts(self, tmp_path):
        config = load_config(write_toy_config(tmp_path))
        from unittest import mock
        import fiberq.pipeline as pipeline

        # force the test stream to reuse the train stream's seeds
        real = pipeline._child_seed

        def collide(root, role, frame_index):
            return real(root, "train", frame_index)

        with mock.patch.object(pipeline, "_child_seed", collide):
            with pytest.raises(IndependenceError) as err:
                simulate_streams(config, 16, 0.0)
        assert err.value.value > 0.99

    def test_multiple_frames_concatenate(self, tmp_path):
        config = load_config(write_toy_config(tmp_path)).with_overrides(
            n_frames_train=2)
        streams = simulate_streams(config, 16, 0.0)
        assert streams.rx_train.n_symbols == 2 * (32896 - 128)
        assert streams.rx_test.n_symbols == 32896 - 128


class TestRunExperiment:
    def test_grid_outputs_and_determinism(self, tmp_path):
        config = load_config(write_toy_config(tmp_path, powers="0.0, 3.0"))
        record = run_experiment(config)
        out = Path(config.out_dir)
        metrics = (out / "metrics.csv").read_text()
        assert metrics.startswith(METRICS_HEADER)
        # 2 powers x (2 baseline rows + 2 heads x 1 lr x 2 splits)
        assert len(metrics.strip().split("\n")) == 1 + 2 * (2 + 4)
        summary = json.loads((out / "run.json").read_text())
        assert summary["config_sha"] == config.config_sha()
        assert len(summary["points"]) == 2

        rerun_dir = tmp_path / "rerun"
        record2 = run_experiment(config.with_overrides(
            out_dir=rerun_dir.as_posix()))
        assert (rerun_dir / "metrics.csv").read_text() == metrics

    def test_worker_count_does_not_change_outputs(self, tmp_path):
        config = load_config(write_toy_config(tmp_path, powers="0.0, 3.0"))
        run_experiment(config)
        baseline = (Path(config.out_dir) / "metrics.csv").read_text()
        os.environ["FQ_THREADS"] = "2"
        try:
            threaded_dir = tmp_path / "threaded"
            run_experiment(config.with_overrides(
                out_dir=threaded_dir.as_posix()))
        finally:
            del os.environ["FQ_THREADS"]
        assert (threaded_dir / "metrics.csv").read_text() == baseline

    def test_paired_runs_share_data_and_trunk(self, tmp_path):
        config = load_config(write_toy_config(tmp_path))
        record = run_experiment(config)
        summary = json.loads(
            (Path(config.out_dir) / "run.json").read_text())
        entries = summary["points"][0]["entries"]
        fairness = [e["fairness"] for e in entries]
        assert len(fairness) == 2
        for key in ("train_dataset_sha", "test_dataset_sha",
                    "trunk_init_sha", "shuffle_epoch0_sha"):
            assert fairness[0][key] == fairness[1][key]

    def test_lr_selection_prefers_larger_on_tie(self, tmp_path):
        config = load_config(write_toy_config(tmp_path, head="regression",
                                              lrs="1e-3, 5e-4"))
        record = run_experiment(config)
        entries = record.points[0].entries
        selected = [e for e in entries if e.selected]
        assert len(selected) == 1
        best_q = max(e.report.best_test_q_db for e in entries)
        tied = [e for e in entries if e.report.best_test_q_db == best_q]
        assert selected[0].learning_rate == max(e.learning_rate for e in tied)


class TestFigureData:
    def test_fig5_series_present(self, tmp_path):
        config = load_config(write_toy_config(tmp_path, powers="0.0, 3.0"))
        run_experiment(config)
        written = emit_figure_data(config.out_dir, "fig5")
        q_file = [p for p in written if p.name == "fig5_16qam_q_db.csv"][0]
        lines = q_file.read_text().strip().split("\n")
        assert lines[0] == ("power_dbm,regression_test,classification_test,"
                            "regression_train,classification_train,"
                            "regular_dsp")
        assert len(lines) == 3
        assert [p.name for p in written] == ["fig5_16qam_q_db.csv",
                                             "fig5_16qam_mi_bits.csv"]

    def test_fig4_requires_order_sweep(self, tmp_path):
        config = load_config(write_toy_config(tmp_path, powers="0.0, 3.0"))
        run_experiment(config)
        with pytest.raises(ValueError, match="modulation_orders"):
            emit_figure_data(config.out_dir, "fig4")

    def test_fig5_requires_power_sweep(self, tmp_path):
        config = load_config(write_toy_config(tmp_path))
        run_experiment(config)
        with pytest.raises(ValueError, match="launch_powers_dbm"):
            emit_figure_data(config.out_dir, "fig5")

    def test_fig6_per_epoch_files(self, tmp_path):
        config = load_config(write_toy_config(tmp_path, head="regression"))
        run_experiment(config)
        written = emit_figure_data(config.out_dir, "fig6")
        assert len(written) == 1
        lines = written[0].read_text().strip().split("\n")
        assert lines[0] == "epoch,train_mi_bits,test_mi_bits"
        assert len(lines) >= 2

    def test_missing_record_errors_before_writing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            emit_figure_data(tmp_path / "nope", "fig5")
        assert not (tmp_path / "nope").exists()
