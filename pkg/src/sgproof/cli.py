"""Command line entry points.

Modes: enumerate, bench, prove, train, minimize, verify, generalize.
Every run writes its delimited artifacts (and figures for report-style
modes) under the output directory, named {mode}_{a}x{b}_{stamp}.*, and
prints one summary line per instance.  A given config and seed produce
byte-identical CSVs up to timing columns.

Exit codes: 0 ok, 2 usage, 3 verification failure, 4 size guard.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .core import Shape
from .instances import (EnumerationSizeError, SigmaInstance, enumerate_sigma,
                        filter_config_for, initial_position)
from .learn.model import load_checkpoint
from .learn.targets import policy_from_value_grid
from .learn.train import TrainConfig, generalization_run, training_cycle
from .minprover import ProverError, minimize
from .prooftree import (RandomPolicy, benchmark_policy, proof_result_to_json,
                        run_proof)
from . import plots, reporting

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFY = 3
EXIT_GUARD = 4


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--a", type=int, default=None)
    sp.add_argument("--b", type=int, default=None)
    sp.add_argument("--sigma", default=None,
                    help="instance selection: 'all', 'suggested', or a comma list")
    sp.add_argument("--filters", default=None,
                    help="'profile,halfones', 'profile', 'halfones' or 'none'")
    sp.add_argument("--no-filters", action="store_true",
                    help="shorthand for --filters none")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--dropout", type=int, default=None)
    sp.add_argument("--width-n", type=int, default=None)
    sp.add_argument("--cycles", type=int, default=None)
    sp.add_argument("--checkpoint", default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--max-enum", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--stamp", default=None, help="artifact name stamp override")
    sp.add_argument("--config", default=None, help="key=value config file")
    sp.add_argument("--json", action="store_true", help="also write JSON artifacts")


DEFAULTS = {
    "a": 3, "b": 2, "sigma": "all", "filters": "profile,halfones",
    "seed": 0, "dropout": 60, "width_n": 4, "cycles": 100,
    "checkpoint": None, "out": "runs", "max_enum": 20, "workers": 1,
    "stamp": None, "config": None,
}


def _resolve(args: argparse.Namespace) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                key = key.strip().replace("-", "_")
                if key not in cfg:
                    raise SystemExit(f"unknown config key: {key}")
                cfg[key] = value.strip()
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    for key in ("a", "b", "seed", "dropout", "width_n", "cycles",
                "max_enum", "workers"):
        cfg[key] = int(cfg[key])
    if getattr(args, "no_filters", False):
        cfg["filters"] = "none"
    return cfg


def _filters(cfg: dict) -> tuple[bool, bool]:
    spec = str(cfg["filters"]).strip().lower()
    table = {
        "profile,halfones": (True, True), "halfones,profile": (True, True),
        "profile": (True, False), "halfones": (False, True), "none": (False, False),
    }
    if spec not in table:
        raise SystemExit(f"bad --filters value: {spec}")
    return table[spec]


def _instances(cfg: dict) -> tuple[Shape, list[SigmaInstance]]:
    shape = Shape(cfg["a"], cfg["b"])
    insts = enumerate_sigma(shape, max_cells=cfg["max_enum"])
    return shape, insts


def _selected(cfg: dict, insts: list[SigmaInstance]) -> list[int]:
    sel = str(cfg["sigma"]).strip().lower()
    if sel == "all":
        return [i.sigma for i in insts]
    if sel == "suggested":
        return [i.sigma for i in insts if i.suggested]
    out = [int(tok) for tok in sel.split(",") if tok != ""]
    for s in out:
        if not 0 <= s < len(insts):
            raise SystemExit(f"sigma {s} out of range (0..{len(insts) - 1})")
    return out


def _artifact(cfg: dict, mode: str, ext: str, suffix: str = "") -> str:
    stamp = cfg["stamp"] or time.strftime("%Y%m%d-%H%M%S")
    name = f"{mode}_{cfg['a']}x{cfg['b']}_{stamp}{suffix}.{ext}"
    return os.path.join(cfg["out"], name)


def _root_and_cfg(inst: SigmaInstance, shape: Shape,
                  flags: tuple[bool, bool]) -> tuple:
    return initial_position(inst, shape), filter_config_for(inst, *flags)


# -- modes -------------------------------------------------------------------

def cmd_enumerate(args) -> int:
    cfg = _resolve(args)
    shape, insts = _instances(cfg)
    payload = []
    for inst in insts:
        rows = ["".join(str(int(v)) for v in row) for row in inst.phi]
        print(f"sigma={inst.sigma:4d} keys={inst.keys} ones={inst.ones} "
              f"suggested={int(inst.suggested)} phi={'|'.join(rows)}")
        payload.append({"sigma": inst.sigma, "keys": list(inst.keys),
                        "phi": inst.phi.tolist(), "ones": inst.ones,
                        "suggested": inst.suggested})
    print(f"total {len(insts)} instances for ({shape.a},{shape.b})")
    if args.json:
        path = reporting.write_json(_artifact(cfg, "enumerate", "json"), payload)
        print(f"wrote {path}")
    return EXIT_OK


def _bench_one(shape, inst, flags, policy_name, seed, checkpoint):
    root, fcfg = _root_and_cfg(inst, shape, flags)
    if policy_name == "benchmark":
        policy = benchmark_policy(shape.a)
    elif policy_name == "random":
        policy = RandomPolicy(np.random.default_rng(seed))
    elif policy_name == "learned":
        model = load_checkpoint(checkpoint)
        policy = policy_from_value_grid(model.predict_local)
    else:
        raise SystemExit(f"unknown policy {policy_name}")
    t0 = time.time()
    result = run_proof(root, policy, fcfg)
    return result, time.time() - t0


def cmd_bench(args) -> int:
    return _run_proofs(args, "bench", "benchmark")


def cmd_prove(args) -> int:
    return _run_proofs(args, "prove", args.policy)


def _run_proofs(args, mode: str, policy_name: str) -> int:
    cfg = _resolve(args)
    flags = _filters(cfg)
    shape, insts = _instances(cfg)
    rows = []
    trees = {}
    for s in _selected(cfg, insts):
        result, secs = _bench_one(shape, insts[s], flags, policy_name,
                                  cfg["seed"], cfg["checkpoint"])
        rows.append({"sigma": s, "policy": policy_name,
                     "filters": cfg["filters"],
                     "passive_nodes": result.passive_nodes,
                     "done": result.done_leaves,
                     "impossible": result.impossible_leaves,
                     "seconds": f"{secs:.3f}"})
        trees[s] = result
        print(f"sigma={s:4d} policy={policy_name} filters={cfg['filters']} "
              f"passive={result.passive_nodes} done={result.done_leaves} "
              f"impossible={result.impossible_leaves} ({secs:.2f}s)")
    total = sum(r["passive_nodes"] for r in rows)
    print(f"total passive nodes: {total}")
    path = reporting.write_csv(_artifact(cfg, mode, "csv"),
                               reporting.BENCH_COLUMNS, rows)
    print(f"wrote {path}")
    fig = plots.plot_sigma_summary(rows, "passive_nodes",
                                   _artifact(cfg, mode, "png"), "passive nodes")
    print(f"wrote {fig}")
    if args.json:
        for s, result in trees.items():
            tpath = _artifact(cfg, mode, "json", suffix=f"_sigma{s}")
            os.makedirs(os.path.dirname(tpath) or ".", exist_ok=True)
            with open(tpath, "w") as fh:
                fh.write(proof_result_to_json(result))
            print(f"wrote {tpath}")
    return EXIT_OK


def _minimize_one(shape, inst, flags):
    root, fcfg = _root_and_cfg(inst, shape, flags)
    return inst.sigma, minimize(root, fcfg)


def cmd_minimize(args) -> int:
    cfg = _resolve(args)
    flags = _filters(cfg)
    shape, insts = _instances(cfg)
    selected = _selected(cfg, insts)
    if cfg["workers"] > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            results = list(pool.map(_minimize_one, [shape] * len(selected),
                                    [insts[s] for s in selected],
                                    [flags] * len(selected)))
    else:
        results = [_minimize_one(shape, insts[s], flags) for s in selected]
    rows, payload = [], []
    for s, res in results:
        rows.append({"sigma": s, "policy": "minimize", "filters": cfg["filters"],
                     "passive_nodes": res.nu_min, "done": "", "impossible": "",
                     "seconds": f"{res.seconds:.3f}"})
        payload.append({"sigma": s, "nu_min": res.nu_min,
                        "matrix": res.matrix.tolist(),
                        "nodes_created": res.nodes_created,
                        "iterations": res.iterations})
        print(f"sigma={s:4d} nu_min={res.nu_min} "
              f"(nodes={res.nodes_created}, {res.seconds:.2f}s)")
        for line in reporting.matrix_lines(res.matrix):
            print("    " + line)
    total = sum(r["passive_nodes"] for r in rows)
    print(f"total nu_min: {total}")
    path = reporting.write_csv(_artifact(cfg, "minimize", "csv"),
                               reporting.BENCH_COLUMNS, rows)
    jpath = reporting.write_json(_artifact(cfg, "minimize", "json"), payload)
    fig = plots.plot_sigma_summary(rows, "passive_nodes",
                                   _artifact(cfg, "minimize", "png"), "nu_min")
    print(f"wrote {path}\nwrote {jpath}\nwrote {fig}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _resolve(args)
    flags = _filters(cfg)
    shape, insts = _instances(cfg)
    sigmas = _selected(cfg, insts)
    tcfg = TrainConfig(dropout=cfg["dropout"], cycles=cfg["cycles"],
                       width_n=cfg["width_n"], profile_on=flags[0],
                       half_ones_on=flags[1], seed=cfg["seed"])
    out_dir = os.path.join(cfg["out"],
                           f"train_{cfg['a']}x{cfg['b']}_"
                           f"{cfg['stamp'] or time.strftime('%Y%m%d-%H%M%S')}")
    os.makedirs(out_dir, exist_ok=True)
    run = training_cycle(shape, insts, sigmas, tcfg, out_dir=out_dir)
    _write_training_artifacts(run, out_dir, shape, insts, sigmas, flags)
    best = {s: run.best_counts.get(s) for s in sigmas}
    print(f"best counts per sigma: {best}")
    print(f"artifacts in {out_dir}")
    return EXIT_OK


def cmd_generalize(args) -> int:
    cfg = _resolve(args)
    flags = _filters(cfg)
    shape, insts = _instances(cfg)
    held = args.holdout
    train_sigmas = [s for s in _selected(cfg, insts) if s != held]
    tcfg = TrainConfig(dropout=cfg["dropout"], cycles=cfg["cycles"],
                       width_n=cfg["width_n"], profile_on=flags[0],
                       half_ones_on=flags[1], seed=cfg["seed"])
    out_dir = os.path.join(cfg["out"],
                           f"generalize_{cfg['a']}x{cfg['b']}_"
                           f"{cfg['stamp'] or time.strftime('%Y%m%d-%H%M%S')}")
    os.makedirs(out_dir, exist_ok=True)
    run = generalization_run(shape, insts, train_sigmas, held, tcfg,
                             out_dir=out_dir)
    _write_training_artifacts(run, out_dir, shape, insts, [held], flags)
    print(f"held-out sigma={held} best={run.best_counts.get(held)}")
    print(f"artifacts in {out_dir}")
    return EXIT_OK


def _write_training_artifacts(run, out_dir, shape, insts, metric_sigmas, flags):
    reporting.write_csv(os.path.join(out_dir, "nodecounts.csv"),
                        reporting.NODE_COLUMNS, run.node_rows)
    reporting.write_csv(os.path.join(out_dir, "losses.csv"),
                        reporting.LOSS_COLUMNS, run.loss_rows)
    bench = {}
    for s in metric_sigmas:
        root, fcfg = _root_and_cfg(insts[s], shape, flags)
        bench[s] = run_proof(root, benchmark_policy(shape.a), fcfg).passive_nodes
    plots.plot_node_counts(run.node_rows,
                           os.path.join(out_dir, "nodecounts.png"), bench)
    plots.plot_losses(run.loss_rows, os.path.join(out_dir, "losses.png"))


def cmd_verify(args) -> int:
    cfg = _resolve(args)
    flags = _filters(cfg)
    shape, insts = _instances(cfg)
    n_random = args.random_seeds
    failures = []
    for s in _selected(cfg, insts):
        root, fcfg = _root_and_cfg(insts[s], shape, flags)
        reference = run_proof(root, benchmark_policy(shape.a), fcfg)
        ref_set = sorted(p.key() for p in reference.done_positions)
        print(f"sigma={s:4d} benchmark done={len(ref_set)}")
        runs = [("random", RandomPolicy(np.random.default_rng(cfg["seed"] + k)))
                for k in range(n_random)]
        if cfg["checkpoint"]:
            model = load_checkpoint(cfg["checkpoint"])
            runs.append(("learned", policy_from_value_grid(model.predict_local)))
        for name, policy in runs:
            other = run_proof(root, policy, fcfg)
            other_set = sorted(p.key() for p in other.done_positions)
            if other_set != ref_set:
                only_ref = len(set(ref_set) - set(other_set))
                only_other = len(set(other_set) - set(ref_set))
                failures.append((s, name, only_ref, only_other))
                print(f"  MISMATCH vs {name}: {only_ref} tables missing, "
                      f"{only_other} extra")
    if failures:
        print(f"verification FAILED on {len(failures)} comparisons")
        return EXIT_VERIFY
    print("verification passed: identical done sets across policies")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgproof",
        description="classification proofs for graded 4-nilpotent semigroups")
    sub = parser.add_subparsers(dest="mode", required=True)
    specs = {
        "enumerate": cmd_enumerate,
        "bench": cmd_bench,
        "prove": cmd_prove,
        "train": cmd_train,
        "minimize": cmd_minimize,
        "verify": cmd_verify,
        "generalize": cmd_generalize,
    }
    for name, fn in specs.items():
        sp = sub.add_parser(name)
        _add_common(sp)
        if name == "prove":
            sp.add_argument("--policy", default="benchmark",
                            choices=["benchmark", "random", "learned"])
        if name == "verify":
            sp.add_argument("--random-seeds", type=int, default=3)
        if name == "generalize":
            sp.add_argument("--holdout", type=int, required=True)
        sp.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (EnumerationSizeError, ProverError) as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
