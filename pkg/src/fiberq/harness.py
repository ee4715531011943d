"""Experiment runner: sweeps, summary tables and figure data.

An experiment is a grid of (modulation order, launch power) points.  At
each point one train/test stream pair is simulated once and shared by
every head and learning rate (the paired-run guarantee); the best
learning rate per head is the one with the highest test Q-factor, ties
going to the larger rate.  The "regular_dsp" rows score the normalized
CDC output with no network in the loop.

Outputs, all under the config's output directory:

``metrics.csv``
    One row per (order, power, head, lr, split).  Columns:
    modulation_order, power_dbm, trunk, head, lr, split, n_symbols, ber,
    ser, q_db, q_flag, evm_db, mi_bits, mi_method, best_epoch,
    epochs_run, selected.  Infinite Q is clamped to +/-99.99 dB with the
    sign in q_flag.  Rows are emitted in sorted order and floats printed
    with repr-stable formatting, so reruns of the same config produce
    byte-identical files.

``train_*.csv``
    Per-epoch history for every trained model (TrainReport.to_csv).

``run.json``
    Config echo, config hash, artifact version, per-point summaries and
    wall-clock times.  Not byte-stable (timing); everything a figure
    needs is also here.

Worker count for independent grid points comes from the ``FQ_THREADS``
environment variable (default 1); results are keyed and sorted, so the
outputs do not depend on scheduling.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dataset import WindowedDataset
from .equalizer import (TrainReport, TrainingDiverged, build_model, evaluate,
                        train)
from .metrics import (MetricReport, clamp_q_db, evm_db,
                      mi_gaussian_lower_bound_points, q_factor_from_ber)

METRICS_HEADER = ("modulation_order,power_dbm,trunk,head,lr,split,"
                  "n_symbols,ber,ser,q_db,q_flag,evm_db,mi_bits,mi_method,"
                  "best_epoch,epochs_run,selected")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def baseline_report(ds: WindowedDataset) -> MetricReport:
    """Regular-DSP metrics on the dataset rows (no NN in the loop)."""
    alphabet = ds.alphabet
    classes = alphabet.nearest_class(ds.rx_symbols)
    bits = alphabet.bit_table[classes]
    ber = float(np.mean(bits != ds.target_bits))
    ser = float(np.mean(classes != ds.class_labels))
    return MetricReport(
        ber=ber, ser=ser, q_db=q_factor_from_ber(ber),
        evm_db=evm_db(ds.rx_symbols, ds.tx_symbols),
        mi_bits=mi_gaussian_lower_bound_points(ds.rx_symbols,
                                               ds.class_labels,
                                               alphabet.order),
        n_symbols=ds.n_rows, method="hard-decision")


@dataclass
class RunEntry:
    head: str
    learning_rate: float
    report: TrainReport | None
    diverged: bool = False
    selected: bool = False
    train_csv: str = ""
    checkpoint: str = ""


@dataclass
class PowerPoint:
    modulation_order: int
    power_dbm: float
    independence: float
    baseline_train: MetricReport
    baseline_test: MetricReport
    entries: list = field(default_factory=list)

    def best_entry(self, head: str) -> RunEntry | None:
        candidates = [e for e in self.entries
                      if e.head == head and e.selected]
        return candidates[0] if candidates else None


@dataclass
class RunRecord:
    config: ExperimentConfig
    points: list
    wall_clock_s: float = 0.0

    def point(self, modulation_order: int, power_dbm: float) -> PowerPoint:
        for p in self.points:
            if (p.modulation_order == modulation_order
                    and p.power_dbm == power_dbm):
                return p
        raise KeyError((modulation_order, power_dbm))


def _train_csv_name(mf, power, head, lr):
    return f"train_{mf}qam_p{_fmt(power)}dbm_{head}_lr{_fmt(lr)}.csv"


def _checkpoint_name(mf, power, head):
    return f"eq_{mf}qam_p{_fmt(power)}dbm_{head}.npz"


def run_power_point(config: ExperimentConfig, modulation_order: int,
                    power_dbm: float, datasets=None) -> PowerPoint:
    """Simulate one grid point and train every (head, lr) combination."""
    from .pipeline import simulate_streams, streams_to_datasets

    if datasets is None:
        streams = simulate_streams(config, modulation_order, power_dbm)
        train_ds, test_ds = streams_to_datasets(config, streams)
        independence = streams.independence
    else:
        train_ds, test_ds, independence = datasets

    point = PowerPoint(
        modulation_order=modulation_order, power_dbm=power_dbm,
        independence=independence,
        baseline_train=baseline_report(train_ds),
        baseline_test=baseline_report(test_ds))

    for head in config.heads:
        spec = config.equalizer_spec(head, modulation_order)
        head_entries = []
        for lr in config.learning_rates:
            model = build_model(spec, config.seed_init)
            try:
                report = train(model, train_ds, test_ds, lr,
                               config.seed_shuffle)
                entry = RunEntry(head=head, learning_rate=lr, report=report)
                entry.model = model
            except TrainingDiverged as err:
                entry = RunEntry(head=head, learning_rate=lr,
                                 report=err.report, diverged=True)
                entry.model = None
            head_entries.append(entry)
        usable = [e for e in head_entries if not e.diverged]
        if usable:
            best = max(usable, key=lambda e: (e.report.best_test_q_db,
                                              e.learning_rate))
            best.selected = True
        point.entries.extend(head_entries)
    return point


def run_experiment(config: ExperimentConfig) -> RunRecord:
    """Run the full grid and write all outputs to config.out_dir."""
    started = time.perf_counter()
    grid = [(mf, power) for mf in config.modulation_orders
            for power in config.launch_powers_dbm]
    workers = max(1, int(os.environ.get("FQ_THREADS", "1")))
    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(
                lambda job: run_power_point(config, *job), grid))
    else:
        points = [run_power_point(config, *job) for job in grid]
    record = RunRecord(config=config, points=points,
                       wall_clock_s=time.perf_counter() - started)
    write_run_record(record)
    return record


def _metric_row(mf, power, config, head, lr, split, rep: MetricReport,
                best_epoch, epochs_run, selected) -> str:
    q, flag = clamp_q_db(rep.q_db)
    return ",".join([
        str(mf), _fmt(power), config.trunk, head, _fmt(lr), split,
        str(rep.n_symbols), _fmt(rep.ber), _fmt(rep.ser), _fmt(q), str(flag),
        _fmt(rep.evm_db), _fmt(rep.mi_bits), rep.method,
        str(best_epoch), str(epochs_run), str(int(selected)),
    ])


def _entry_metric_report(entry: RunEntry, ds_rows: int, split: str
                         ) -> MetricReport | None:
    ev = (entry.report.best_eval if split == "test"
          else entry.report.best_train_eval)
    if ev is None:
        return None
    method = ("gaussian-lower-bound" if entry.head == "regression"
              else "classification-cel")
    return MetricReport(ber=ev.ber, ser=ev.ser, q_db=ev.q_db,
                        evm_db=ev.evm_db, mi_bits=ev.mi_bits,
                        n_symbols=ds_rows, method=method)


def write_run_record(record: RunRecord) -> None:
    config = record.config
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    lines = [METRICS_HEADER]
    index = []
    for point in sorted(record.points,
                        key=lambda p: (p.modulation_order, p.power_dbm)):
        mf, power = point.modulation_order, point.power_dbm
        for split, rep in (("train", point.baseline_train),
                           ("test", point.baseline_test)):
            lines.append(_metric_row(mf, power, config, "regular_dsp", 0.0,
                                     split, rep, -1, 0, False))
        point_index = {
            "modulation_order": mf, "power_dbm": power,
            "independence": point.independence,
            "baseline": {
                split: {"ber": rep.ber, "ser": rep.ser, "q_db": rep.q_db,
                        "evm_db": rep.evm_db, "mi_bits": rep.mi_bits,
                        "n_symbols": rep.n_symbols}
                for split, rep in (("train", point.baseline_train),
                                   ("test", point.baseline_test))},
            "entries": [],
        }
        for entry in sorted(point.entries,
                            key=lambda e: (e.head, e.learning_rate)):
            if entry.report is not None:
                csv_name = _train_csv_name(mf, power, entry.head,
                                           entry.learning_rate)
                entry.report.to_csv(out / csv_name)
                entry.train_csv = csv_name
            if entry.diverged:
                point_index["entries"].append({
                    "head": entry.head, "lr": entry.learning_rate,
                    "diverged": True, "train_csv": entry.train_csv})
                continue
            rep = entry.report
            n_rows = point.baseline_test.n_symbols
            for split in ("train", "test"):
                metric = _entry_metric_report(entry, n_rows, split)
                lines.append(_metric_row(
                    mf, power, config, entry.head, entry.learning_rate,
                    split, metric, rep.best_epoch, rep.epochs_run,
                    entry.selected))
            if entry.selected and getattr(entry, "model", None) is not None:
                from .nn.checkpoint import save_checkpoint
                ckpt = _checkpoint_name(mf, power, entry.head)
                save_checkpoint(out / ckpt, entry.model.net,
                                epoch=rep.best_epoch,
                                meta={"head": entry.head,
                                      "modulation_order": mf,
                                      "power_dbm": power,
                                      "lr": entry.learning_rate,
                                      "trunk": config.trunk})
                entry.checkpoint = ckpt
            point_index["entries"].append({
                "head": entry.head, "lr": entry.learning_rate,
                "diverged": False, "selected": entry.selected,
                "train_csv": entry.train_csv,
                "checkpoint": entry.checkpoint,
                "best_epoch": rep.best_epoch,
                "epochs_run": rep.epochs_run,
                "wall_clock_s": rep.wall_clock_s,
                "fairness": rep.fairness,
                "best": {
                    split: {"ber": ev.ber, "ser": ev.ser, "q_db": ev.q_db,
                            "evm_db": ev.evm_db, "mi_bits": ev.mi_bits}
                    for split, ev in (("test", rep.best_eval),
                                      ("train", rep.best_train_eval))
                    if ev is not None},
            })
        index.append(point_index)

    _atomic_write(out / "metrics.csv", "\n".join(lines) + "\n")
    payload = {
        "artifact_version": __version__,
        "config": json.loads(config.canonical_json()),
        "config_sha": config.config_sha(),
        "wall_clock_s": record.wall_clock_s,
        "points": index,
    }
    _atomic_write(out / "run.json", json.dumps(payload, indent=2,
                                               sort_keys=True) + "\n")


def load_run_summary(run_dir) -> dict:
    """Read run.json back; raises ConfigError-compatible ValueError."""
    path = Path(run_dir) / "run.json"
    if not path.exists():
        raise FileNotFoundError(f"no run.json under {run_dir}")
    return json.loads(path.read_text())


# ----------------------------------------------------------------------
# figure data emission


def _series_value(point_entry, split, metric):
    values = point_entry["best"].get(split)
    if values is None:
        return math.nan
    value = values[metric]
    return clamp_q_db(value)[0] if metric == "q_db" else value


def _selected(entries, head):
    for e in entries:
        if e["head"] == head and e.get("selected") and not e["diverged"]:
            return e
    return None


def emit_figure_data(run_dir, figure: str, out_dir=None) -> list:
    """Write the tabular series behind one figure family.

    ``fig4``: metric vs modulation order (one file per power and metric;
    needs >= 2 modulation orders).  ``fig5``: metric vs launch power with
    train/test series for both heads plus the DSP baseline (one file per
    order and metric; needs >= 2 powers and both heads).  ``fig6``:
    per-epoch train/test MI (one file per trained model).  Validation
    happens before any file is written.
    """
    summary = load_run_summary(run_dir)
    points = summary["points"]
    if not points:
        raise ValueError("empty run record: nothing to plot")
    out = Path(out_dir) if out_dir is not None else Path(run_dir) / "figures"
    orders = sorted({p["modulation_order"] for p in points})
    powers = sorted({p["power_dbm"] for p in points})
    heads = sorted({e["head"] for p in points for e in p["entries"]})
    trunk = summary["config"]["trunk"]
    outputs: list[tuple[str, str]] = []

    if figure == "fig4":
        if len(orders) < 2:
            raise ValueError("fig4 needs a modulation_orders sweep "
                             "(>= 2 orders in the record)")
        for power in powers:
            for metric in ("q_db", "mi_bits"):
                header = ["modulation_order"]
                header += [f"{trunk}_{head}_test" for head in heads]
                header += ["regular_dsp"]
                rows = []
                for mf in orders:
                    p = next(q for q in points
                             if q["modulation_order"] == mf
                             and q["power_dbm"] == power)
                    row = [str(mf)]
                    for head in heads:
                        e = _selected(p["entries"], head)
                        row.append(_fmt(_series_value(e, "test", metric))
                                   if e else "nan")
                    base = p["baseline"]["test"]
                    value = (clamp_q_db(base["q_db"])[0]
                             if metric == "q_db" else base[metric])
                    row.append(_fmt(value))
                    rows.append(",".join(row))
                name = f"fig4_p{_fmt(power)}dbm_{metric}.csv"
                outputs.append((name,
                                "\n".join([",".join(header)] + rows) + "\n"))
    elif figure == "fig5":
        if len(powers) < 2:
            raise ValueError("fig5 needs a launch_powers_dbm sweep "
                             "(>= 2 powers in the record)")
        if not {"regression", "classification"} <= set(heads):
            raise ValueError("fig5 needs both heads in the record "
                             "(run with head = 'both')")
        for mf in orders:
            for metric in ("q_db", "mi_bits"):
                header = ("power_dbm,regression_test,classification_test,"
                          "regression_train,classification_train,"
                          "regular_dsp")
                rows = []
                for power in powers:
                    p = next(q for q in points
                             if q["modulation_order"] == mf
                             and q["power_dbm"] == power)
                    cells = [_fmt(power)]
                    for split in ("test", "train"):
                        for head in ("regression", "classification"):
                            e = _selected(p["entries"], head)
                            cells.append(
                                _fmt(_series_value(e, split, metric))
                                if e else "nan")
                    base = p["baseline"]["test"]
                    value = (clamp_q_db(base["q_db"])[0]
                             if metric == "q_db" else base[metric])
                    cells.append(_fmt(value))
                    rows.append(",".join(cells))
                name = f"fig5_{mf}qam_{metric}.csv"
                outputs.append((name, header + "\n" + "\n".join(rows) + "\n"))
    elif figure == "fig6":
        run_path = Path(run_dir)
        any_report = False
        for p in points:
            for e in p["entries"]:
                if not e.get("train_csv"):
                    continue
                any_report = True
                text = (run_path / e["train_csv"]).read_text()
                epochs, train_mi, test_mi = [], [], []
                for line in text.strip().split("\n")[1:]:
                    cells = line.split(",")
                    epochs.append(cells[0])
                    train_mi.append(cells[7])
                    test_mi.append(cells[8])
                rows = [f"{ep},{tr},{te}" for ep, tr, te
                        in zip(epochs, train_mi, test_mi)]
                name = (f"fig6_{p['modulation_order']}qam_"
                        f"p{_fmt(p['power_dbm'])}dbm_{e['head']}_"
                        f"lr{_fmt(e['lr'])}.csv")
                outputs.append(
                    (name, "epoch,train_mi_bits,test_mi_bits\n"
                     + "\n".join(rows) + "\n"))
        if not any_report:
            raise ValueError("fig6 needs per-epoch training reports "
                             "in the record")
    else:
        raise ValueError(f"unknown figure {figure!r} "
                         "(choose fig4, fig5 or fig6)")

    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in outputs:
        _atomic_write(out / name, text)
        written.append(out / name)
    return written
