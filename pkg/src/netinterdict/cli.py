"""Command-line entry point: generate, label, train, evaluate, compare, diagnose.

Exit codes: 0 success, 1 failed check or criterion, 2 usage or I/O error.
The default seed for every subcommand is read from $INTERDICT_SEED.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from multiprocessing import Pool

import numpy as np

from netinterdict import diagnostics
from netinterdict.decision import (
    PnsConfig,
    anytime_compare,
    end_to_end,
    evaluate,
    random_strategy,
)
from netinterdict.gnn import (
    GnnConfig,
    TrainConfig,
    forward,
    history_csv,
    load_checkpoint,
    save_checkpoint,
    train,
)
from netinterdict.instances import GenConfig, InstanceError, generate_mfi, generate_spi
from netinterdict.milp import SolverConfig
from netinterdict.oracle import label_record
from netinterdict.pipeline import (
    SEED_ENV,
    default_seed,
    derive_seed,
    graph_for,
    label_vector,
    labels_by_id,
    read_instances,
    split_of,
    write_jsonl,
)
from netinterdict.reduction import reduce_instance


class UsageError(Exception):
    pass


def _delay(text):
    if text == "cost":
        return "cost"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("delay must be 'cost' or a number")


def cmd_generate(args):
    make = generate_spi if args.kind == "spi" else generate_mfi
    budget = args.budget if args.budget is not None else 15
    records = []
    for i in range(args.count):
        cfg = GenConfig(
            node_count=args.nodes,
            density=args.density,
            cost_range=(args.cost_lo, args.cost_hi),
            capacity_range=(args.cap_lo, args.cap_hi),
            delay=args.delay,
            budget=budget,
            seed=derive_seed(args.seed, args.kind, args.nodes, i),
        )
        inst = make(cfg, id=f"{args.kind}{args.nodes}-{args.seed}-{i:05d}")
        records.append(inst.to_dict())
    write_jsonl(args.out, records)
    print(f"wrote {len(records)} {args.kind} instances (n={args.nodes}) to {args.out}")
    return 0


def _label_one(job):
    inst, method, cfg = job
    return label_record(inst, method, cfg)


def _pmap(fn, jobs, n):
    if n <= 1:
        return [fn(j) for j in jobs]
    with Pool(n) as pool:
        return pool.map(fn, jobs)


def _solver_cfg(args) -> SolverConfig:
    cfg = {}
    if getattr(args, "solver_config", None):
        with open(args.solver_config) as fh:
            cfg.update(json.load(fh))
    for key in ("node_limit", "time_limit_ms", "gap_tol"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return SolverConfig.from_dict(cfg)


def cmd_label(args):
    insts = read_instances(args.instances)
    scfg = _solver_cfg(args)
    recs = _pmap(_label_one, [(inst, args.method, scfg) for inst in insts], args.jobs)
    write_jsonl(args.out, recs)
    print(f"labeled {len(recs)} instances with {args.method} -> {args.out}")
    return 0


def _dataset(insts, labels, split, seed, random_dim):
    out = []
    for inst in insts:
        if inst.id not in labels:
            raise UsageError(f"no label for instance {inst.id}")
        if split is None or split_of(inst.id, seed) == split:
            out.append((inst, labels[inst.id]))
    return out


def cmd_train(args):
    insts = read_instances(args.instances)
    labels = labels_by_id(args.labels)
    cfg = GnnConfig(
        n_var_groups=3 if insts and insts[0].kind == "mfi" else 2,
        layers=args.layers,
        dim=args.dim,
        hidden=tuple(args.hidden),
        random_dim=args.random_dim,
        shared_message=not args.separate_messages,
        seed=args.seed,
    )

    def to_data(split):
        return [
            (graph_for(inst, cfg.random_dim, args.seed), label_vector(rec))
            for inst, rec in _dataset(insts, labels, split, args.seed, cfg.random_dim)
        ]

    train_set, val_set = to_data("train"), to_data("val")
    if not train_set:
        raise UsageError("training split is empty")
    tc = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, seed=args.seed)
    model, hist = train(
        train_set,
        cfg,
        tc,
        val=val_set,
        log=lambda row: print(
            f"epoch {row['epoch']:4d}  train {row['train_loss']:.5f}  val {row['val_loss']:.5f}"
        ),
    )
    save_checkpoint(model, args.out, {"split_seed": args.seed, "n_train": len(train_set)})
    if args.history:
        with open(args.history, "w") as fh:
            fh.write(history_csv(hist))
    print(f"saved checkpoint to {args.out}")
    return 0


def cmd_evaluate(args):
    if not os.path.exists(args.checkpoint):
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    model = load_checkpoint(args.checkpoint)
    split_seed = model.meta.get("split_seed", args.seed)
    insts = read_instances(args.instances)
    labels = labels_by_id(args.labels)
    split = None if args.split == "all" else args.split
    data = _dataset(insts, labels, split, split_seed, model.config.random_dim)
    dataset = [(inst, rec["optimal_value"]) for inst, rec in data]
    by_id = {inst.id: rec for inst, rec in data}
    strategies = {}
    for name in args.strategies.split(","):
        if name == "model":
            strategies[name] = lambda inst: end_to_end(
                forward(model, graph_for(inst, model.config.random_dim, split_seed)), inst
            ).x
        elif name == "random":
            strategies[name] = random_strategy(args.seed)
        elif name == "oracle":
            strategies[name] = lambda inst: np.asarray(by_id[inst.id]["label_x"])
        else:
            raise UsageError(f"unknown strategy {name!r}")
    reports = evaluate(dataset, strategies)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "report.json"), "w") as fh:
        json.dump({k: v.to_dict() for k, v in reports.items()}, fh, indent=1)
    with open(os.path.join(args.out_dir, "report.csv"), "w") as fh:
        fh.write("strategy,n,ratio_mean,ratio_std,gap_mean,gap_std\n")
        for rep in reports.values():
            a = rep.aggregate()
            fh.write(
                f"{a['strategy']},{a['n']},{a['ratio_mean']!r},{a['ratio_std']!r},"
                f"{a['gap_mean']!r},{a['gap_std']!r}\n"
            )
    with open(os.path.join(args.out_dir, "rows.csv"), "w") as fh:
        for i, rep in enumerate(reports.values()):
            text = rep.rows_csv()
            fh.write(text if i == 0 else text.split("\n", 1)[1])
    for rep in reports.values():
        a = rep.aggregate()
        print(
            f"{a['strategy']:>8}: ratio {a['ratio_mean']:.4f} +- {a['ratio_std']:.4f}  "
            f"gap {a['gap_mean']:.4f} +- {a['gap_std']:.4f}  (n={a['n']})"
        )
    return 0


def cmd_compare(args):
    if not os.path.exists(args.checkpoint):
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    model = load_checkpoint(args.checkpoint)
    split_seed = model.meta.get("split_seed", args.seed)
    insts = read_instances(args.instances)
    lines = ["instance,method,time_ms,value"]
    for inst in insts:
        milp = reduce_instance(inst)
        pred = forward(model, graph_for(inst, model.config.random_dim, split_seed))
        cmp = anytime_compare(
            milp, pred, PnsConfig(args.k0, args.k1, args.delta), args.time_limit_ms
        )
        for row in cmp.to_csv().splitlines()[1:]:
            lines.append(f"{inst.id},{row}")
        a, b = cmp.first_incumbents()
        print(f"{inst.id}: first incumbent plain={a} guided={b}")
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def cmd_diagnose(args):
    model = None
    if args.checkpoint:
        try:
            model = load_checkpoint(args.checkpoint)
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            print(f"[FAIL] gradcheck: unreadable checkpoint ({exc})")
            return 1
    all_ok = True
    for name in args.checks.split(","):
        if name not in diagnostics.SUITES:
            raise UsageError(f"unknown check {name!r}")
        if name == "gradcheck":
            ok, msg = diagnostics.gradcheck_suite(model, seed=args.seed)
        else:
            ok, msg = diagnostics.SUITES[name](seed=args.seed)
        all_ok &= ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {msg}")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="netinterdict",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"Environment: {SEED_ENV} sets the default --seed.",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=default_seed(), help=f"default ${SEED_ENV} or 0")
        return sp

    def solver_flags(sp):
        sp.add_argument("--solver-config", help="JSON file with node_limit/time_limit_ms/gap_tol")
        sp.add_argument("--node-limit", dest="node_limit", type=int)
        sp.add_argument("--time-limit-ms", dest="time_limit_ms", type=float)
        sp.add_argument("--gap-tol", dest="gap_tol", type=float)

    g = seeded(sub.add_parser("generate", help="write random instances as JSONL"))
    g.add_argument("--kind", choices=["spi", "mfi"], required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--cost-lo", type=float, default=1.0)
    g.add_argument("--cost-hi", type=float, default=10.0)
    g.add_argument("--cap-lo", type=float, default=10.0)
    g.add_argument("--cap-hi", type=float, default=60.0)
    g.add_argument("--delay", type=_delay, default="cost", help="'cost' (d = c) or a constant")
    g.add_argument("--budget", type=float, help="interdiction budget (default 15)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    lb = seeded(sub.add_parser("label", help="solve instances to optimality for labels"))
    lb.add_argument("--instances", required=True)
    lb.add_argument("--method", choices=["oracle", "milp"], default="oracle")
    lb.add_argument("--out", required=True)
    lb.add_argument("--jobs", type=int, default=1)
    solver_flags(lb)
    lb.set_defaults(func=cmd_label)

    t = seeded(sub.add_parser("train", help="train the GNN on the 50%% train split"))
    t.add_argument("--instances", required=True)
    t.add_argument("--labels", required=True)
    t.add_argument("--out", required=True, help="checkpoint path (JSON)")
    t.add_argument("--history", help="loss history CSV")
    t.add_argument("--layers", type=int, default=2)
    t.add_argument("--dim", type=int, default=64)
    t.add_argument("--hidden", type=int, nargs="+", default=[64])
    t.add_argument("--random-dim", type=int, default=2)
    t.add_argument("--separate-messages", action="store_true")
    t.add_argument("--epochs", type=int, default=50)
    t.add_argument("--batch-size", type=int, default=8)
    t.add_argument("--lr", type=float, default=1e-4)
    t.set_defaults(func=cmd_train)

    e = seeded(sub.add_parser("evaluate", help="end-to-end metrics on a split"))
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--instances", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--split", choices=["train", "val", "test", "all"], default="test")
    e.add_argument("--strategies", default="model,random,oracle")
    e.add_argument("--out-dir", required=True)
    e.set_defaults(func=cmd_evaluate)

    c = seeded(sub.add_parser("compare", help="anytime plain B&B vs predict-and-search"))
    c.add_argument("--checkpoint", required=True)
    c.add_argument("--instances", required=True)
    c.add_argument("--k0", type=int, required=True)
    c.add_argument("--k1", type=int, required=True)
    c.add_argument("--delta", type=int, required=True)
    c.add_argument("--time-limit-ms", type=float, default=10000.0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)

    d = seeded(sub.add_parser("diagnose", help="run property suites"))
    d.add_argument("--checks", default="wl,duality,gradcheck,oracle-vs-milp")
    d.add_argument("--checkpoint", help="gradient-check this model instead of a fresh one")
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (UsageError, InstanceError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
