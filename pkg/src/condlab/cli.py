"""Command-line interface.

Subcommands: train, attack, blackbox, condnum, table, fig3, synth.
Flags shared across commands: --dataset, --arch, --seed, --out, --config,
--data-dir. Attack flags: --attack, --eps, --alpha, --iters, --no-clip.
A --config file supplies key=value defaults; explicit flags win.

Exit codes: 0 success, 1 validation error (bad flags, bad values,
misclassified demo sample), 2 I/O error (missing or malformed files),
3 numerical failure (divergence, non-convergence).
"""

import argparse
import csv
import sys

import numpy as np

from . import attacks, blackbox, checkpoint, config, demo, nn, synth
from . import tables, train as train_mod
from .exceptions import (CondlabError, ConditioningError,
                         DegenerateInputError, FormatError, TrainingError,
                         ValidationError)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

_ATTACK_NAMES = {"fgsm": "fgsm", "bim": "bim", "randfgsm": "rand_fgsm",
                 "rand_fgsm": "rand_fgsm"}


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; here that is a
    validation failure, so remap it to exit code 1."""

    def error(self, message):
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add_shared(p):
    p.add_argument("--dataset", choices=("mnist", "fmnist"))
    p.add_argument("--arch", choices=("a", "b", "c"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--data-dir", dest="data_dir")


def _add_attack_flags(p):
    p.add_argument("--attack", choices=("fgsm", "bim", "randfgsm"))
    p.add_argument("--eps", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--no-clip", dest="clip", action="store_const",
                   const=False)


def _resolve(args, defaults):
    """Layer argument sources: explicit flag > config file > default."""
    values = config.load(args.config) if args.config else {}
    out = {}
    for key, default in defaults.items():
        cli = getattr(args, key, None)
        if cli is not None:
            out[key] = cli
        elif key in values:
            out[key] = values[key]
        else:
            out[key] = default
    out["_file_values"] = values
    return out


def _arch(value):
    return value.upper() if value else value


def _load_eval(opts, count_key="eval_count"):
    scale = tables.Scale("cli", subsample=opts.get("subsample"),
                         epochs=0, eval_count=opts.get(count_key))
    return tables.load_corpus(opts["data_dir"], opts["dataset"], scale,
                              opts["seed"])


def _write_rows(out_path, header, rows):
    tables.write_report(out_path, header, rows)
    print(f"wrote {out_path}")


def cmd_synth(args):
    opts = _resolve(args, {
        "out": None, "train_count": 12_000, "test_count": 2_000, "seed": 0,
    })
    if not opts["out"]:
        raise ValidationError("synth needs --out DIR")
    paths = synth.write_corpus(opts["out"], opts["train_count"],
                               opts["test_count"], seed=opts["seed"])
    for path in paths.values():
        print(f"wrote {path}")
    return EXIT_OK


def cmd_train(args):
    opts = _resolve(args, {
        "dataset": "mnist", "arch": "b", "seed": 0, "out": None,
        "data_dir": "data", "epochs": 5, "batch_size": 64,
        "learning_rate": 1e-3, "optimizer": "adam", "subsample": 10_000,
        "val_fraction": 0.1, "lambda_base": 0.0, "adv": False,
        "adv_eps": 0.3, "mix_fraction": 0.5,
    })
    arch = _arch(opts["arch"])
    scale = tables.Scale("cli", subsample=opts["subsample"],
                         epochs=opts["epochs"], eval_count=None)
    train_ds, val_ds, _, _ = tables.load_corpus(
        opts["data_dir"], opts["dataset"], scale, opts["seed"])

    adv = None
    if opts["adv"]:
        adv = train_mod.AdvTraining(eps=opts["adv_eps"],
                                    mix_fraction=opts["mix_fraction"])
    reg = config.reg_from_values(opts["_file_values"])
    cfg = train_mod.TrainConfig(
        arch=arch, epochs=opts["epochs"], batch_size=opts["batch_size"],
        learning_rate=opts["learning_rate"], optimizer=opts["optimizer"],
        seed=opts["seed"], reg=reg, adv=adv,
        lambda_base=opts["lambda_base"] if reg is None else 0.0)
    runner = train_mod.adversarial_train if adv else train_mod.train
    net, history = runner(cfg, (train_ds, val_ds))

    for entry in history:
        val = entry["val_accuracy"]
        print(f"epoch {entry['epoch']}: train_loss {entry['train_loss']:.4f}"
              f" val_accuracy {'-' if val is None else f'{val:.4f}'}"
              f" max_kappa {entry['max_kappa']:.4g}")
    mode = ("adv_regz" if adv and cfg.lambda_base > 0 else
            "adv" if adv else
            "regz" if (reg is not None or cfg.lambda_base > 0) else "normal")
    out = opts["out"] or (f"{opts['dataset']}-{arch}-{mode}"
                          f"-seed{opts['seed']}.nnc")
    checkpoint.save_checkpoint(net, out)
    print(f"saved checkpoint {out}")
    return EXIT_OK


def cmd_attack(args):
    opts = _resolve(args, {
        "dataset": "mnist", "seed": 0, "out": None, "data_dir": "data",
        "checkpoint": None, "attack": "fgsm", "eps": 0.3, "alpha": None,
        "iters": None, "clip": True, "eval_count": 2_000,
    })
    if not opts["checkpoint"]:
        raise ValidationError("attack needs --checkpoint PATH")
    net = checkpoint.load_checkpoint(opts["checkpoint"])
    _, _, _, eval_set = _load_eval(opts)
    spec = attacks.AttackSpec(
        kind=_ATTACK_NAMES[opts["attack"]], eps=opts["eps"],
        alpha=opts["alpha"], iters=opts["iters"],
        clip_to_domain=opts["clip"], seed=opts["seed"])
    clean = train_mod.evaluate_clean(net, eval_set)
    row = train_mod.evaluate_adversarial(
        net, spec, eval_set, dataset=opts["dataset"], arch=net.name,
        training_mode="checkpoint", seed=opts["seed"])
    print(f"clean accuracy      {clean:.4f} on {len(eval_set)} samples")
    print(f"adversarial accuracy {row.accuracy:.4f} "
          f"({spec.kind} eps={spec.eps:g})")
    if opts["out"]:
        _write_rows(opts["out"], tables.ACCURACY_HEADER,
                    [tables._accuracy_row("-", row, None)])
    return EXIT_OK


def cmd_blackbox(args):
    opts = _resolve(args, {
        "dataset": "mnist", "seed": 0, "out": None, "data_dir": "data",
        "checkpoint": None, "eps": 0.3, "rounds": 6, "seed_count": 150,
        "lam_aug": 0.1, "eval_count": 2_000,
    })
    if not opts["checkpoint"]:
        raise ValidationError("blackbox needs --checkpoint PATH")
    target = checkpoint.load_checkpoint(opts["checkpoint"])
    _, _, test, eval_set = _load_eval(opts)
    seeds_ds = test.take(min(opts["seed_count"], len(test)))
    oracle = blackbox.net_oracle(target)
    adv, state, transfer = blackbox.black_box_attack(
        oracle, seeds_ds, rounds=opts["rounds"], eps=opts["eps"],
        eval_set=eval_set, lam_aug=opts["lam_aug"], seed=opts["seed"])
    clean = train_mod.evaluate_clean(target, eval_set)
    for i, agreement in enumerate(state.agreements):
        print(f"round {i}: substitute-target agreement {agreement:.4f} "
              f"(training set {len(seeds_ds) * 2 ** min(i, opts['rounds'])})")
    print(f"oracle queries      {state.query_count}")
    print(f"clean accuracy      {clean:.4f}")
    print(f"transfer accuracy   {transfer:.4f} "
          f"(fgsm eps={opts['eps']:g} via substitute)")
    if opts["out"]:
        row = train_mod.ReportRow(
            dataset=opts["dataset"], arch=target.name,
            training_mode="checkpoint", attack="blackbox_fgsm",
            eps=opts["eps"], accuracy=transfer, seed=opts["seed"])
        _write_rows(opts["out"], tables.ACCURACY_HEADER,
                    [tables._accuracy_row("-", row, None)])
    return EXIT_OK


def cmd_condnum(args):
    opts = _resolve(args, {"checkpoint": None, "out": None})
    if not opts["checkpoint"]:
        raise ValidationError("condnum needs --checkpoint PATH")
    net = checkpoint.load_checkpoint(opts["checkpoint"])
    reports, max_kappa = nn.layer_condition_numbers(net)
    for r in reports:
        kappa = "inf" if np.isinf(r.kappa) else f"{r.kappa:.6g}"
        print(f"{r.layer_name}  shape {r.shape[0]}x{r.shape[1]}  "
              f"sigma_max {r.sigma_max:.6g}  sigma_min {r.sigma_min:.6g}  "
              f"kappa {kappa}")
    print(f"max kappa {max_kappa:.6g}")
    if opts["out"]:
        header = ("layer", "rows", "cols", "sigma_max", "sigma_min", "kappa")
        rows = [(r.layer_name, r.shape[0], r.shape[1],
                 f"{r.sigma_max:.17g}", f"{r.sigma_min:.17g}",
                 f"{r.kappa:.17g}") for r in reports]
        _write_rows(opts["out"], header, rows)
    return EXIT_OK


def cmd_table(args):
    opts = _resolve(args, {
        "table": None, "scale": "desk", "seed": 0, "out": None,
        "data_dir": "data", "dataset": None, "arch": None,
        "lambda_base": tables.DEFAULT_LAMBDA_BASE, "epochs": None,
        "rounds": 6, "seed_count": 150,
    })
    if not opts["table"]:
        raise ValidationError("table needs --table {I..IX}")
    table_id = str(opts["table"]).upper()
    out = opts["out"] or f"table-{table_id}-{opts['scale']}.csv"
    rows = tables.run_table(
        table_id, opts["scale"], out, opts["data_dir"],
        dataset=opts["dataset"], arch=_arch(opts["arch"]),
        seed=opts["seed"], lambda_base=opts["lambda_base"],
        epochs=opts["epochs"], rounds=opts["rounds"],
        seed_count=opts["seed_count"])
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_fig3(args):
    opts = _resolve(args, {
        "dataset": "mnist", "seed": 0, "out": ".", "data_dir": "data",
        "checkpoint": None, "perturb_scale": 20.0, "sample_index": 0,
        "clip": True,
    })
    if not opts["checkpoint"]:
        raise ValidationError("fig3 needs --checkpoint PATH")
    scale = tables.Scale("cli", subsample=None, epochs=0, eval_count=None)
    _, _, test, _ = tables.load_corpus(opts["data_dir"], opts["dataset"],
                                       scale, opts["seed"])
    files, report = demo.fig3_demo(
        opts["checkpoint"], opts["perturb_scale"], opts["clip"],
        opts["sample_index"], test, opts["out"])
    print(f"sample {report['sample_index']} class {report['true_class']}: "
          f"original confidence {report['original_confidence']:.4f}")
    for name in ("unclipped", "clipped"):
        entry = report[name]
        print(f"{name}: confidence {entry['confidence']:.4f} "
              f"predicted {entry['predicted_class']} "
              f"sigma_min {entry['sigma_min']:.4g}")
    for name in ("original", "unclipped", "clipped", "report"):
        print(f"wrote {files[name]}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="condlab",
                     description="Weight-conditioning adversarial lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[], help="train and checkpoint")
    _add_shared(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--optimizer", choices=sorted(("sgd", "sgd_momentum",
                                                  "adam")))
    p.add_argument("--subsample", type=int)
    p.add_argument("--val-fraction", dest="val_fraction", type=float)
    p.add_argument("--lambda-base", dest="lambda_base", type=float)
    p.add_argument("--adv", action="store_const", const=True)
    p.add_argument("--adv-eps", dest="adv_eps", type=float)
    p.add_argument("--mix-fraction", dest="mix_fraction", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="evaluate a checkpoint under attack")
    _add_shared(p)
    _add_attack_flags(p)
    p.add_argument("--checkpoint")
    p.add_argument("--eval-count", dest="eval_count", type=int)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("blackbox",
                       help="label-only substitute attack on a checkpoint")
    _add_shared(p)
    p.add_argument("--checkpoint")
    p.add_argument("--eps", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed-count", dest="seed_count", type=int)
    p.add_argument("--lam-aug", dest="lam_aug", type=float)
    p.add_argument("--eval-count", dest="eval_count", type=int)
    p.set_defaults(func=cmd_blackbox)

    p = sub.add_parser("condnum",
                       help="per-layer condition numbers of a checkpoint")
    _add_shared(p)
    p.add_argument("--checkpoint")
    p.set_defaults(func=cmd_condnum)

    p = sub.add_parser("table", help="regenerate a report table as CSV")
    _add_shared(p)
    p.add_argument("--table")
    p.add_argument("--scale", choices=("desk", "full"))
    p.add_argument("--lambda-base", dest="lambda_base", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed-count", dest="seed_count", type=int)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("fig3",
                       help="least-sensitive-direction confidence demo")
    _add_shared(p)
    p.add_argument("--checkpoint")
    p.add_argument("--scale", dest="perturb_scale", type=float)
    p.add_argument("--sample-index", dest="sample_index", type=int)
    p.add_argument("--no-clip", dest="clip", action="store_const",
                   const=False)
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("synth", help="write a synthetic digit corpus")
    _add_shared(p)
    p.add_argument("--train-count", dest="train_count", type=int)
    p.add_argument("--test-count", dest="test_count", type=int)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DegenerateInputError) as exc:
        print(f"condlab: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FormatError, OSError) as exc:
        print(f"condlab: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingError, ConditioningError) as exc:
        print(f"condlab: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CondlabError as exc:
        print(f"condlab: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
