"""The headline experiment: train both equalizer heads on one link and
compare test Q-factor and mutual information.

Run:  python3 demos/05_regression_vs_classification.py   (5-10 minutes)

Equivalent CLI:  fiberq sweep --config configs/ssmf_16qam.toml --desk-scale
"""

from fiberq.config import DESK_SCALE, ExperimentConfig
from fiberq.equalizer import build_model, train
from fiberq.harness import baseline_report
from fiberq.metrics import clamp_q_db
from fiberq.pipeline import simulate_streams, streams_to_datasets

config = ExperimentConfig(
    link_preset="ssmf_5x100", seed_data=101, seed_init=202, seed_noise=303,
    seed_shuffle=404, launch_powers_dbm=(6.0,), **DESK_SCALE)

print("simulating 2 x 2^16 symbols over 5x100 km SSMF at 6 dBm ...")
streams = simulate_streams(config, 16, 6.0)
train_ds, test_ds = streams_to_datasets(config, streams)
base = baseline_report(test_ds)
print(f"regular DSP baseline: Q {clamp_q_db(base.q_db)[0]:.2f} dB, "
      f"MI {base.mi_bits:.4f} bits\n")

results = {}
for head in ("regression", "classification"):
    model = build_model(config.equalizer_spec(head, 16), config.seed_init)
    print(f"training the {head} head (same trunk init, same data, "
          f"same shuffling) ...")
    report = train(model, train_ds, test_ds,
                   learning_rate=config.learning_rates[0],
                   shuffle_seed=config.seed_shuffle)
    results[head] = report
    test, tr = report.best_eval, report.best_train_eval
    print(f"  {report.epochs_run} epochs, best at {report.best_epoch}: "
          f"test Q {clamp_q_db(test.q_db)[0]:.2f} dB "
          f"(train {clamp_q_db(tr.q_db)[0]:.2f}), "
          f"test MI {test.mi_bits:.4f} (train {tr.mi_bits:.4f})\n")

reg, cls = results["regression"], results["classification"]
gap_reg = clamp_q_db(reg.best_train_eval.q_db)[0] - clamp_q_db(reg.best_eval.q_db)[0]
gap_cls = clamp_q_db(cls.best_train_eval.q_db)[0] - clamp_q_db(cls.best_eval.q_db)[0]
print("summary:")
print(f"  test-Q advantage of regression: "
      f"{clamp_q_db(reg.best_eval.q_db)[0] - clamp_q_db(cls.best_eval.q_db)[0]:+.2f} dB")
print(f"  train-minus-test Q gap: regression {gap_reg:.2f} dB, "
      f"classification {gap_cls:.2f} dB")
print("  the cross-entropy head memorizes the training noise (large gap); "
      "the squared-error head generalizes.")
