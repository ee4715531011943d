"""Command-line interface.

Subcommands::

    simulate   Tx -> link -> Rx symbol streams, cached as FQSF files
    train      build datasets from the cache and train the equalizers
    evaluate   score a saved checkpoint on the cached test data
    sweep      the full pipeline in one go (simulate + train + report)
    figure     emit plot data (fig4 | fig5 | fig6) from a finished run
    selftest   fast invariant suite

Exit codes: 0 success, 1 invalid configuration or usage, 2 runtime
failure, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config


class _Parser(argparse.ArgumentParser):
    def error(self, message):   # argparse would exit(2); the contract is 1
        raise ConfigError(f"{message}\n{self.format_usage()}")


def _add_config_options(sub):
    sub.add_argument("--config", required=True, help="TOML experiment file")
    sub.add_argument("--desk-scale", action="store_true",
                     help="overlay laptop-sized training defaults")
    sub.add_argument("--out", default=None,
                     help="output directory (overrides [output] dir)")
    sub.add_argument("--seed-override", action="append", default=[],
                     metavar="NAME=VALUE",
                     help="override one seed (data|init|noise|shuffle)")


def build_parser() -> _Parser:
    parser = _Parser(prog="fiberq",
                     description="coherent fiber transmission laboratory "
                                 "with NN post-equalizers")
    parser.add_argument("--version", action="version",
                        version=f"fiberq {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, descr in (("simulate", "simulate Tx->Rx streams to cache"),
                        ("train", "train equalizers from the cache"),
                        ("sweep", "run the full experiment grid"),
                        ("evaluate", "score a checkpoint on cached data")):
        sub = subs.add_parser(name, help=descr)
        _add_config_options(sub)
        if name == "evaluate":
            sub.add_argument("--checkpoint", required=True,
                             help="checkpoint .npz from a previous run")
    fig = subs.add_parser("figure", help="emit plot data from a run")
    fig.add_argument("--record", required=True,
                     help="run directory containing run.json")
    fig.add_argument("--figure", required=True,
                     choices=("fig4", "fig5", "fig6"))
    fig.add_argument("--out", default=None)
    subs.add_parser("selftest", help="run the fast invariant suite")
    return parser


def _parse_seed_overrides(pairs):
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--seed-override needs NAME=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            overrides[key] = int(value)
        except ValueError as err:
            raise ConfigError(f"seed override {key!r}: {err}") from err
    return overrides


def _config_from_args(args):
    return load_config(args.config, desk_scale=args.desk_scale,
                       seed_overrides=_parse_seed_overrides(args.seed_override),
                       out_dir=args.out)


def _cache_paths(config, modulation_order, power_dbm):
    from .harness import _fmt
    cache = Path(config.out_dir) / "cache"
    stem = f"{modulation_order}qam_p{_fmt(power_dbm)}dbm"
    return {(role, kind): cache / f"{stem}_{role}_{kind}.fqsf"
            for role in ("train", "test") for kind in ("rx", "tx")}


def cmd_simulate(args) -> int:
    from .container import write_frame
    from .pipeline import simulate_streams

    config = _config_from_args(args)
    cache = Path(config.out_dir) / "cache"
    cache.mkdir(parents=True, exist_ok=True)
    for mf in config.modulation_orders:
        for power in config.launch_powers_dbm:
            streams = simulate_streams(config, mf, power)
            paths = _cache_paths(config, mf, power)
            write_frame(paths[("train", "rx")], streams.rx_train)
            write_frame(paths[("train", "tx")], streams.tx_train)
            write_frame(paths[("test", "rx")], streams.rx_test)
            write_frame(paths[("test", "tx")], streams.tx_test)
            print(f"simulated {mf}-QAM at {power:+g} dBm "
                  f"(independence {streams.independence:.4f}) -> {cache}")
    return 0


def _load_cached_datasets(config, mf, power):
    from .container import read_frame
    from .dataset import check_dataset_independence
    from .pipeline import INDEPENDENCE_THRESHOLD, IndependenceError, streams_to_datasets
    from .pipeline import SimulatedStreams

    paths = _cache_paths(config, mf, power)
    missing = [p for p in paths.values() if not p.exists()]
    if missing:
        raise FileNotFoundError(
            f"cache incomplete for {mf}-QAM {power:+g} dBm; run "
            f"`fiberq simulate` first (missing {missing[0].name})")
    frames = {key: read_frame(path) for key, path in paths.items()}
    independence = check_dataset_independence(frames[("train", "tx")],
                                              frames[("test", "tx")])
    if independence > INDEPENDENCE_THRESHOLD:
        raise IndependenceError(independence)
    streams = SimulatedStreams(
        rx_train=frames[("train", "rx")], tx_train=frames[("train", "tx")],
        rx_test=frames[("test", "rx")], tx_test=frames[("test", "tx")],
        independence=independence)
    train_ds, test_ds = streams_to_datasets(config, streams)
    return train_ds, test_ds, independence


def cmd_train(args) -> int:
    from .harness import RunRecord, run_power_point, write_run_record

    config = _config_from_args(args)
    points = []
    for mf in config.modulation_orders:
        for power in config.launch_powers_dbm:
            datasets = _load_cached_datasets(config, mf, power)
            point = run_power_point(config, mf, power, datasets=datasets)
            points.append(point)
            for entry in point.entries:
                status = ("diverged" if entry.diverged else
                          f"best test Q at epoch {entry.report.best_epoch}")
                print(f"{mf}-QAM {power:+g} dBm {entry.head} "
                      f"lr={entry.learning_rate:g}: {status}")
    write_run_record(RunRecord(config=config, points=points))
    print(f"wrote {Path(config.out_dir) / 'metrics.csv'}")
    return 0


def cmd_sweep(args) -> int:
    from .harness import run_experiment

    config = _config_from_args(args)
    record = run_experiment(config)
    for point in record.points:
        for head in config.heads:
            entry = point.best_entry(head)
            if entry is None:
                continue
            from .metrics import clamp_q_db
            q, _ = clamp_q_db(entry.report.best_test_q_db)
            print(f"{point.modulation_order}-QAM "
                  f"{point.power_dbm:+g} dBm {head}: "
                  f"test Q {q:.2f} dB (lr {entry.learning_rate:g})")
    print(f"wrote {Path(config.out_dir) / 'metrics.csv'}")
    return 0


def cmd_evaluate(args) -> int:
    from .equalizer import build_model, evaluate
    from .harness import METRICS_HEADER, _entry_metric_report, _metric_row
    from .metrics import clamp_q_db
    from .nn.checkpoint import load_checkpoint, restore_model

    config = _config_from_args(args)
    params, record, _ = load_checkpoint(args.checkpoint)
    meta = record["meta"]
    mf, power, head = (meta["modulation_order"], meta["power_dbm"],
                       meta["head"])
    _, test_ds, _ = _load_cached_datasets(config, mf, power)
    model = build_model(config.equalizer_spec(head, mf), config.seed_init)
    restore_model(model.net, params)
    result = evaluate(model, test_ds)
    q, flag = clamp_q_db(result.q_db)
    print(f"{mf}-QAM {power:+g} dBm {head} (epoch {record['epoch']}): "
          f"ber={result.ber:.4g} ser={result.ser:.4g} q={q:.2f} dB "
          f"evm={result.evm_db:.1f} dB mi={result.mi_bits:.4f} bits")
    return 0


def cmd_figure(args) -> int:
    from .harness import emit_figure_data

    try:
        written = emit_figure_data(args.record, args.figure, args.out)
    except FileNotFoundError as err:
        raise ConfigError(str(err)) from err
    except ValueError as err:
        raise ConfigError(str(err)) from err
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_selftest(_args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(verbose=True) else 3


_COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "evaluate": cmd_evaluate,
    "figure": cmd_figure,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as err:
        traceback.print_exc()
        print(f"runtime failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
