"""Command-line surface.

Subcommands: pretrain, eval, campaign, inject, dump, diff, xsection,
report. Dataset paths come from --data-dir or NN_DATA_DIR (standard MNIST
file names, .gz accepted); defaults may be set in a key=value config file
passed with --config or NN_CONFIG, and flags override the config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import campaign as camp
from . import crng, dumptools, faultsim, idx
from .config import Config, ConfigError
from .dumptools import format_sci
from .faultsim import FaultModel
from .memory import SynapticMemory
from .network import Dataset, NeuronPool, evaluate
from .plasticity import init_baseline_memory, pretrain

LABELS_VERSION = 1


class CliError(RuntimeError):
    pass


# -- shared plumbing -----------------------------------------------------------


def _load_config(args) -> Config:
    path = getattr(args, "config", None) or os.environ.get("NN_CONFIG")
    if path:
        return Config.load(path)
    return Config()


def _data_dir(args, cfg: Config) -> Path:
    path = getattr(args, "data_dir", None) or os.environ.get("NN_DATA_DIR") \
        or cfg.get("data.dir")
    if not path:
        raise CliError(
            "no dataset directory: pass --data-dir, set NN_DATA_DIR, "
            "or set data.dir in the config file"
        )
    return Path(path)


def _load_split(data_dir: Path, split: str, limit: int | None = None) -> Dataset:
    images_path, labels_path = idx.find_split(data_dir, split)
    image_set = idx.load_image_set(images_path, labels_path)
    ds = Dataset.from_images(image_set.images, image_set.labels, name=split)
    if limit is not None and limit < len(ds):
        ds = ds.subset(slice(0, limit), name=f"{split}[:{limit}]")
    return ds


def labels_sidecar_path(weights_path: str | Path) -> Path:
    return Path(weights_path).with_suffix(".labels.json")


def save_labels(path: str | Path, config, flagged: list[int]) -> None:
    payload = {
        "format": "radsnn-labels",
        "version": LABELS_VERSION,
        "n_post": config.n_post,
        "n_outputs": config.n_outputs,
        "label_map": [int(x) for x in config.label_map],
        "flagged_neurons": flagged,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=1) + "\n")
    tmp.replace(path)


def load_labels(path: str | Path) -> tuple[np.ndarray, int]:
    data = json.loads(Path(path).read_text())
    if data.get("format") != "radsnn-labels":
        raise CliError(f"{path} is not a label-map file")
    return np.asarray(data["label_map"], dtype=np.int16), int(data["n_outputs"])


def _load_baseline(args, cfg: Config) -> camp.BaselineNetwork:
    weights = Path(args.weights)
    if not weights.exists():
        raise CliError(f"weights file not found: {weights}")
    sidecar = Path(args.label_map) if getattr(args, "label_map", None) \
        else labels_sidecar_path(weights)
    if not sidecar.exists():
        raise CliError(f"label map not found: {sidecar}")
    memory = dumptools.load(dumptools.DumpFile.read(weights))
    label_map, n_outputs = load_labels(sidecar)
    net = cfg.network_config()
    net.n_outputs = n_outputs
    net.label_map = label_map
    return camp.BaselineNetwork(memory, net, cfg.sdsp_params())


def _pick(flag_value, cfg: Config, key: str, default):
    if flag_value is not None:
        return flag_value
    return cfg.get(key, default)


def _onoff(value: str) -> bool:
    if value in ("on", "off"):
        return value == "on"
    raise argparse.ArgumentTypeError("expected 'on' or 'off'")


def _fault_model(args, cfg: Config) -> FaultModel:
    scope = _pick(args.scope, cfg, "fault.scope", "relevant_bits")
    seed = _pick(args.fault_seed, cfg, "fault.seed", 0)
    eta = _pick(args.eta, cfg, "fault.eta", faultsim.REF_ETA)
    mttu = _pick(args.mttu_s, cfg, "fault.mttu_s", None)
    sigma = _pick(args.sigma, cfg, "fault.sigma", None)
    flux = _pick(args.flux, cfg, "fault.flux", None)
    if mttu is not None:
        if sigma is not None or flux is not None:
            raise CliError("give either --mttu-s or --sigma/--flux, not both")
        return FaultModel.from_mttu(mttu, scope=scope, eta=eta, seed=seed)
    if flux is None and sigma is None:
        # Default calibration: the measured relevant-bit upset interval.
        return FaultModel.from_mttu(
            faultsim.REF_MTTU_RELEVANT_S, scope=scope, eta=eta, seed=seed
        )
    return FaultModel(
        sigma=sigma if sigma is not None else faultsim.REF_SIGMA_CM2,
        flux=flux if flux is not None else 0.0,
        eta=eta, scope=scope, seed=seed,
    )


# -- subcommands ---------------------------------------------------------------


def cmd_pretrain(args) -> int:
    cfg = _load_config(args)
    data_dir = _data_dir(args, cfg)
    net = cfg.network_config()
    sdsp = cfg.sdsp_params()
    passes = _pick(args.passes, cfg, "pretrain.passes", 3)
    train_size = _pick(args.train_size, cfg, "pretrain.train_size", 6000)
    seed = _pick(args.seed, cfg, "pretrain.seed", 1)

    train = _load_split(data_dir, "train", train_size)
    neurons = NeuronPool.for_config(net)
    memory = init_baseline_memory(net, neurons)
    print(f"pretraining on {len(train)} images, {passes} passes, seed {seed}")
    label_map, flagged = pretrain(memory, neurons, train, net, sdsp,
                                  passes=passes, seed=seed)
    net.label_map = label_map
    if flagged:
        print(f"note: neurons silent during labeling: {flagged}")

    if args.holdout == "train":
        holdout = train
    else:
        holdout = _load_split(data_dir, "test", args.eval_size)
    enc_eval = crng.mix(seed, crng.TAG_ENCODE, camp.ROLE_EVAL)
    acc = evaluate(memory, neurons, holdout, net, enc_eval)
    print(f"baseline accuracy on {len(holdout)} held-out images: {acc:.4f}")

    dumptools.dump(memory, seed=seed).write(args.out)
    save_labels(labels_sidecar_path(args.out), net, flagged)
    print(f"wrote weights to {args.out} and labels to {labels_sidecar_path(args.out)}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    baseline = _load_baseline(args, cfg)
    data_dir = _data_dir(args, cfg)
    ds = _load_split(data_dir, args.set, args.limit)
    neurons = NeuronPool.for_config(baseline.config)
    enc = crng.mix(args.seed, crng.TAG_ENCODE, camp.ROLE_EVAL)
    acc = evaluate(baseline.memory, neurons, ds, baseline.config, enc)
    print(f"accuracy on {len(ds)} {args.set} images: {acc:.4f}")
    return 0


def cmd_campaign(args) -> int:
    cfg = _load_config(args)
    baseline = _load_baseline(args, cfg)
    data_dir = _data_dir(args, cfg)
    eval_size = _pick(args.eval_size, cfg, "campaign.eval_size", 10000)
    epoch_size = _pick(args.epoch_size, cfg, "campaign.epoch_size", 6000)
    ccfg = camp.CampaignConfig(
        eval_set=_load_split(data_dir, "test", eval_size),
        epoch_set=_load_split(data_dir, "train", epoch_size),
        period_hours=_pick(args.period_hours, cfg, "campaign.period_hours", 120.0),
        n_periods=_pick(args.periods, cfg, "campaign.n_periods", 7),
        learning_enabled=_pick(args.learning, cfg, "campaign.learning", True),
        tmr_enabled=_pick(args.tmr, cfg, "campaign.tmr", False),
        schedule=_pick(args.schedule, cfg, "campaign.schedule", "epoch"),
        n_seeds=_pick(args.seeds, cfg, "campaign.n_seeds", 45),
        base_seed=_pick(args.base_seed, cfg, "campaign.base_seed", 1),
    )
    model = _fault_model(args, cfg)
    workers = _pick(args.workers, cfg, "campaign.workers", 1)

    print(
        f"campaign: {ccfg.n_periods} x {ccfg.period_hours} h, "
        f"{ccfg.n_seeds} seeds, learning {'on' if ccfg.learning_enabled else 'off'}, "
        f"tmr {'on' if ccfg.tmr_enabled else 'off'}, "
        f"rate {format_sci(faultsim.upset_rate(model))}/s"
    )
    logs = camp.run_campaign(ccfg, baseline, model, workers=workers)
    agg = camp.aggregate(logs)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    camp.export_csv(logs, out_dir / "runs.csv")
    camp.export_aggregate_csv(agg, out_dir / "aggregate.csv")
    end = agg.end_of_run
    print(f"wrote {out_dir / 'runs.csv'} and {out_dir / 'aggregate.csv'}")
    print(
        f"end of run ({end.equivalent_hours:g} h): "
        f"min {end.min:.4f}  mean {end.mean:.4f}  max {end.max:.4f}"
    )
    return 0


def cmd_inject(args) -> int:
    cfg = _load_config(args)
    model = _fault_model(args, cfg)
    if args.weights:
        memory = dumptools.load(dumptools.DumpFile.read(args.weights))
        sidecar = labels_sidecar_path(args.weights)
        n_outputs = load_labels(sidecar)[1] if sidecar.exists() else args.n_outputs
    else:
        memory = SynapticMemory()
        n_outputs = args.n_outputs
    enabled = np.arange(n_outputs, dtype=np.int32)

    counts = []
    for trial in range(args.trials):
        work = memory.copy() if args.trials > 1 else memory
        stream = crng.stream_for(model.seed, crng.TAG_FAULT, trial)
        log: list | None = [] if args.log else None
        flips = faultsim.inject_period(work, model, args.hours, stream,
                                       enabled=enabled, log=log)
        counts.append(flips)
        if args.log:
            faultsim.write_event_log(args.log, log)
    if args.trials == 1:
        print(f"{counts[0]} flips applied over {args.hours:g} h")
        if args.out:
            dumptools.dump(memory, seed=model.seed).write(args.out)
            print(f"wrote mutated memory to {args.out}")
    else:
        mean = sum(counts) / len(counts)
        print(
            f"{args.trials} trials over {args.hours:g} h: "
            f"mean {mean:.4f} flips (min {min(counts)}, max {max(counts)})"
        )
    return 0


def cmd_dump(args) -> int:
    df = dumptools.DumpFile.read(args.file)
    bits = df.bit_array()
    print(f"geometry: {df.n_pre} x {df.n_post} x {df.bits_per_entry} bits "
          f"({df.total_bits} total)")
    print(f"version: {df.version}  seed: {df.seed}  timestamp_s: {df.timestamp_s}")
    print(f"set bits: {int(bits.sum())}")
    return 0


def cmd_diff(args) -> int:
    a = dumptools.DumpFile.read(args.a)
    b = dumptools.DumpFile.read(args.b)
    count, positions = dumptools.diff(a, b)
    print(f"{count} flips")
    shown = positions[: args.limit]
    if count and args.limit:
        print("first positions:", " ".join(str(int(p)) for p in shown))
    if args.csv:
        mem = dumptools.load(a)
        rows = []
        for p in positions:
            pre, post, k = mem.decode_bit(int(p))
            rows.append([int(p), pre, post, k])
        camp.write_csv(args.csv, ["bit_index", "pre", "post", "bit_in_record"], rows)
        print(f"wrote {args.csv}")
    return 0


def cmd_xsection(args) -> int:
    sigma = dumptools.cross_section(args.n_errors, args.fluence)
    print(f"sigma = {format_sci(sigma)} cm^2")
    return 0


def cmd_report(args) -> int:
    cfg = _load_config(args)
    ledger = cfg.ledger() or dumptools.DEFAULT_LEDGER
    rows = dumptools.fluence_report(ledger)
    name_w = max(len(r["config_name"]) for r in rows) + 2
    print(f"{'configuration':<{name_w}}{'runtime_s':>10}  {'fluence':>9}  {'flux':>9}")
    for r in rows:
        print(
            f"{r['config_name']:<{name_w}}{r['runtime_s']:>10.0f}  "
            f"{format_sci(r['fluence']):>9}  {format_sci(r['flux']):>9}"
        )
    eta = dumptools.relevant_fraction(args.n_outputs)
    sigma = faultsim.REF_SIGMA_CM2
    print()
    print(f"reference cross-section: {format_sci(sigma)} cm^2 "
          f"({faultsim.REF_FLIP_COUNT} flips / {format_sci(faultsim.REF_FLUENCE)})")
    print(f"relevant-bit fraction ({args.n_outputs} enabled neurons): "
          f"{eta * 100:.5f}%")
    for r in rows:
        mttu_full = 1.0 / (sigma * r["flux"])
        mttu_rel = mttu_full / eta
        print(f"derived from {r['config_name']}: mean time to upset "
              f"{mttu_full:.1f} s full memory, {mttu_rel:.1f} s relevant bits")
    print(f"quoted calibration: {faultsim.REF_MTTU_FULL_S:.0f} s full memory, "
          f"{faultsim.REF_MTTU_RELEVANT_S:.0f} s relevant bits")
    return 0


# -- parser ----------------------------------------------------------------------


def _add_fault_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mttu-s", type=float, default=None,
                   help="mean time to upset in seconds (overrides sigma/flux)")
    p.add_argument("--sigma", type=float, default=None, help="cross-section, cm^2")
    p.add_argument("--flux", type=float, default=None, help="particles/cm^2/s")
    p.add_argument("--eta", type=float, default=None, help="relevant-bit fraction")
    p.add_argument("--scope", choices=faultsim.SCOPES, default=None)
    p.add_argument("--fault-seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radsnn",
        description="Spiking-network reliability simulator: pretraining, "
        "fault-injection campaigns, and dump analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--data-dir", default=None,
                       help="directory with MNIST-format IDX files")

    p = sub.add_parser("pretrain", help="teacher-assisted pretraining of a baseline")
    common(p)
    p.add_argument("--out", required=True, help="output weights dump (.odmp)")
    p.add_argument("--train-size", type=int, default=None)
    p.add_argument("--passes", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eval-size", type=int, default=None,
                   help="held-out images to report accuracy on")
    p.add_argument("--holdout", choices=("test", "train"), default="test")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("eval", help="evaluate stored weights on a dataset")
    common(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--label-map", default=None)
    p.add_argument("--set", choices=("train", "test"), default="test")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("campaign", help="period-based exposure campaign")
    common(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--label-map", default=None)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--period-hours", type=float, default=None)
    p.add_argument("--periods", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--base-seed", type=int, default=None)
    p.add_argument("--learning", type=_onoff, default=None, metavar="on|off")
    p.add_argument("--tmr", type=_onoff, default=None, metavar="on|off")
    p.add_argument("--schedule", choices=camp.SCHEDULES, default=None)
    p.add_argument("--eval-size", type=int, default=None)
    p.add_argument("--epoch-size", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    _add_fault_flags(p)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("inject", help="apply scheduled upsets to a memory")
    common(p)
    p.add_argument("--weights", default=None,
                   help="dump to mutate (blank memory when omitted)")
    p.add_argument("--hours", type=float, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--n-outputs", type=int, default=10,
                   help="enabled neurons when no weights file is given")
    p.add_argument("--out", default=None, help="write mutated dump here")
    p.add_argument("--log", default=None, help="write event CSV here")
    _add_fault_flags(p)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("dump", help="inspect a memory dump")
    p.add_argument("file")
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("diff", help="compare two memory dumps")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--limit", type=int, default=8,
                   help="flip positions to print (0 = none)")
    p.add_argument("--csv", default=None, help="write full flip list here")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("xsection", help="cross-section from error count and fluence")
    p.add_argument("n_errors", type=int)
    p.add_argument("fluence", type=float)
    p.set_defaults(func=cmd_xsection)

    p = sub.add_parser("report", help="fluence ledger and derived rate table")
    p.add_argument("--config", default=None)
    p.add_argument("--n-outputs", type=int, default=10)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, FileNotFoundError, ValueError,
            dumptools.DumpFormatError, idx.IdxParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
