import numpy as np
import pytest

from fiberq.dataset import build_dataset
from fiberq.equalizer import (EqualizerSpec, TrainingDiverged, build_model,
                              classifier_symbols, equalize, evaluate, train)
from fiberq.frames import SymbolFrame
from fiberq.metrics import evm_db
from fiberq.qam import build_alphabet, generate_bits, map_bits_dual_pol

ALPHABET = build_alphabet(16)


def identity_datasets(n=4096, n_neighbors=0, seeds=(1, 2), noise=0.0):
    """Datasets whose target is the center received symbol (no channel)."""
    out = []
    for seed in seeds:
        tx = map_bits_dual_pol(generate_bits(2 * n * 4, seed), ALPHABET,
                               symbol_rate=1.0)
        x, y = tx.syms_x, tx.syms_y
        if noise:
            rng = np.random.default_rng(seed + 500)
            x = x + noise * (rng.normal(size=n) + 1j * rng.normal(size=n))
            y = y + noise * (rng.normal(size=n) + 1j * rng.normal(size=n))
        rx = SymbolFrame(x, y, role="received", alphabet=ALPHABET)
        out.append(build_dataset(rx, tx, n_neighbors=n_neighbors))
    return out


def toy_spec(**overrides):
    base = dict(trunk="mlp", head="regression", modulation_order=16,
                n_neighbors=0, mlp_hidden=(32, 16, 8), minibatch=128,
                learning_rates=(5e-3,), max_epochs=50, patience=49)
    base.update(overrides)
    return EqualizerSpec(**base)


class TestSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            toy_spec(trunk="cnn")
        with pytest.raises(ValueError):
            toy_spec(head="ordinal")
        with pytest.raises(ValueError):
            toy_spec(patience=50, max_epochs=50)
        with pytest.raises(ValueError):
            toy_spec(minibatch=0)

    def test_memory_from_neighbors(self):
        assert toy_spec(n_neighbors=25).memory == 51


class TestBuildModel:
    def test_paper_mlp_parameter_count(self):
        # hand-computed from the layer shapes with M = 51 (input 204):
        # (204*481+481) + (481*31+31) + (31*263+263) + (263*2+2)
        expected = (204 * 481 + 481) + (481 * 31 + 31) \
            + (31 * 263 + 263) + (263 * 2 + 2)
        assert expected == 122491
        spec = toy_spec(n_neighbors=25, mlp_hidden=(481, 31, 263))
        model = build_model(spec, seed=0)
        assert model.net.param_count() == expected

    def test_heads_share_trunk_initialization(self):
        reg = build_model(toy_spec(n_neighbors=3), seed=11)
        cls = build_model(toy_spec(n_neighbors=3, head="classification"),
                          seed=11)
        assert reg.trunk_init_sha == cls.trunk_init_sha
        # layer-by-layer identity of the trunk weights
        for lr, lc in zip(reg.net.layers[:-1], cls.net.layers[:-1]):
            for name, p in lr.params().items():
                assert np.array_equal(p, lc.params()[name])
        # heads differ in shape by construction
        assert reg.net.layers[-1].w.shape[1] == 2
        assert cls.net.layers[-1].w.shape[1] == 16

    def test_different_seeds_differ(self):
        a = build_model(toy_spec(), seed=1)
        b = build_model(toy_spec(), seed=2)
        assert a.trunk_init_sha != b.trunk_init_sha

    def test_bilstm_trunk_zero_input_gives_zero_pre_head(self):
        spec = toy_spec(trunk="bilstm", lstm_hidden=3, n_neighbors=2)
        model = build_model(spec, seed=5)
        for d in ("fw", "bw"):
            model.net.layers[0]._p[f"b_{d}"][...] = 0.0
        x = np.zeros((4, 5, 4), dtype=np.float32)
        pre_head = x
        for layer in model.net.layers[:-1]:
            pre_head = layer.forward(pre_head)
        assert np.array_equal(pre_head, np.zeros((4, 5 * 6), np.float32))


class TestTraining:
    def test_identity_task_regression_reaches_minus_30_db(self):
        train_ds, test_ds = identity_datasets()
        model = build_model(toy_spec(), seed=7)
        report = train(model, train_ds, test_ds, learning_rate=5e-3,
                       shuffle_seed=3)
        pred = equalize(model, test_ds)
        assert evm_db(pred, test_ds.tx_symbols) <= -30.0
        assert report.epochs_run <= 50

    def test_classifier_toy_matches_hard_decision(self):
        train_ds, test_ds = identity_datasets(noise=0.02)
        spec = toy_spec(head="classification", max_epochs=100, patience=99)
        model = build_model(spec, seed=7)
        train(model, train_ds, test_ds, learning_rate=5e-3, shuffle_seed=3)
        probs = equalize(model, test_ds)
        assert probs.shape == (test_ds.n_rows, 16)
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) < 1e-9
        hard = ALPHABET.nearest_class(test_ds.rx_symbols)
        assert np.array_equal(np.argmax(probs, axis=1), hard)
        syms = classifier_symbols(probs, ALPHABET)
        assert np.array_equal(syms, ALPHABET.points[hard])

    def test_patience_zero_stops_at_first_non_improving_epoch(self):
        # the noiseless toy saturates test Q at +inf immediately; with the
        # loss tie-break removed from play by construction, epoch 1 cannot
        # improve on a converged epoch 0, so patience=0 halts at epoch 1
        train_ds, test_ds = identity_datasets(n=512)
        spec = toy_spec(max_epochs=40, patience=0, minibatch=64)
        model = build_model(spec, seed=3)
        report = train(model, train_ds, test_ds, learning_rate=0.0,
                       shuffle_seed=1)
        assert report.stopped_early
        assert report.epochs_run == 2
        assert report.best_epoch == 0

    def test_same_seed_reproduces_report_exactly(self):
        train_ds, test_ds = identity_datasets(n=1024, noise=0.05)
        spec = toy_spec(max_epochs=8, patience=7)

        def run():
            model = build_model(spec, seed=9)
            rep = train(model, train_ds, test_ds, learning_rate=1e-3,
                        shuffle_seed=17)
            return rep, model.net.snapshot()

        rep1, params1 = run()
        rep2, params2 = run()
        assert rep1.train_loss == rep2.train_loss
        assert rep1.test_q_db == rep2.test_q_db
        assert rep1.best_epoch == rep2.best_epoch
        for a, b in zip(params1, params2):
            assert np.array_equal(a, b)

    def test_best_epoch_is_argmax_of_series(self):
        train_ds, test_ds = identity_datasets(n=1024, noise=0.15)
        spec = toy_spec(max_epochs=10, patience=9)
        model = build_model(spec, seed=13)
        report = train(model, train_ds, test_ds, learning_rate=1e-3,
                       shuffle_seed=5)
        assert report.best_test_q_db == max(report.test_q_db)
        assert report.test_q_db[report.best_epoch] == report.best_test_q_db

    def test_divergence_aborts_with_report(self):
        train_ds, test_ds = identity_datasets(n=512)
        broken = train_ds.inputs.copy()
        broken[0, 0, 0] = np.nan
        from dataclasses import replace
        bad_ds = replace(train_ds, inputs=broken)
        model = build_model(toy_spec(max_epochs=5, patience=4), seed=1)
        with pytest.raises(TrainingDiverged) as err:
            train(model, bad_ds, test_ds, learning_rate=1e-3, shuffle_seed=1)
        assert err.value.report is not None

    def test_fairness_hashes_match_across_heads(self):
        train_ds, test_ds = identity_datasets(n=1024, noise=0.05)
        reports = {}
        for head in ("regression", "classification"):
            spec = toy_spec(head=head, max_epochs=3, patience=2)
            model = build_model(spec, seed=21)
            reports[head] = train(model, train_ds, test_ds,
                                  learning_rate=1e-3, shuffle_seed=33)
        for key in ("train_dataset_sha", "test_dataset_sha",
                    "trunk_init_sha", "shuffle_epoch0_sha"):
            assert (reports["regression"].fairness[key]
                    == reports["classification"].fairness[key])

    def test_train_report_csv_round_trip(self, tmp_path):
        train_ds, test_ds = identity_datasets(n=512)
        model = build_model(toy_spec(max_epochs=3, patience=2), seed=2)
        report = train(model, train_ds, test_ds, learning_rate=1e-3,
                       shuffle_seed=2)
        path = tmp_path / "report.csv"
        report.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == report.CSV_HEADER
        assert len(lines) == report.epochs_run + 1
        # clamped Q never exceeds the sentinel
        q_col = [float(line.split(",")[5]) for line in lines[1:]]
        assert all(abs(q) <= 99.99 for q in q_col)


class TestEvaluate:
    def test_regression_metrics_on_known_noise(self):
        train_ds, test_ds = identity_datasets(n=2048, noise=0.1)
        model = build_model(toy_spec(), seed=1)
        # bypass training: wire the head to copy the center features
        # through an identity-like trunk is impractical; instead sanity
        # check the metric plumbing on the untrained model
        result = evaluate(model, test_ds)
        assert 0.0 <= result.ber <= 1.0
        assert 0.0 <= result.ser <= 1.0
        assert result.mi_bits <= 4.0

    def test_classification_probs_rows_sum_to_one(self):
        train_ds, test_ds = identity_datasets(n=512)
        model = build_model(toy_spec(head="classification"), seed=1)
        probs = equalize(model, test_ds)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
