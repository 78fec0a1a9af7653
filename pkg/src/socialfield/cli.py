"""Command-line entry point: ``socialfield {run,validate,bench,fanout,plan-memory}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .bench import SweepSpec, cmd_bench, memory_plan, recurrent_fanout
from .engine.pipeline import Engine, Mode
from .engine.state import IntegrityError
from .fields import N_SECTS, FieldKind, FieldSpec, build_write_plan, fanout_oracle
from .grid import Footprint, GridGeometry
from .scenario_io import (
    Directions,
    ScenarioConfig,
    ScenarioError,
    SeedingError,
    load_scenario,
    scale_fields,
    seed_population,
    write_metrics,
)
from .validation import compare_runs

EXIT_OK, EXIT_PARSE, EXIT_SEED, EXIT_INTEGRITY, EXIT_DIVERGED = 0, 1, 2, 3, 4


def _pair(text: str) -> tuple[int, int]:
    a, _, b = text.lower().partition("x")
    return int(a), int(b or a)


def _csv(conv):
    return lambda text: [conv(v) for v in text.split(",") if v]


def _load(args):
    cfg = load_scenario(args.scenario)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "chunk_k", None) is not None:
        changes["chunk_k"] = args.chunk_k
    if getattr(args, "ticks", None) is not None:
        changes["ticks"] = args.ticks
    return cfg.replace(**changes) if changes else cfg


def cmd_run(args) -> int:
    try:
        cfg = _load(args)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        s0 = seed_population(cfg)
    except SeedingError as exc:
        print(f"seeding error: {exc}", file=sys.stderr)
        return EXIT_SEED
    t0 = time.perf_counter()
    try:
        with Engine(cfg.engine_config(), Mode(args.mode), args.workers) as eng:
            state, metrics = eng.run(s0, cfg.ticks, copy=False)
    except IntegrityError as exc:
        print(f"integrity violation: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    wall = time.perf_counter() - t0
    if args.out:
        write_metrics(metrics, args.out)
    moved = sum(m.moved for m in metrics)
    print(f"final tick {state.tick}; pedestrians {len(state.population)}; moves {moved}; wall {wall:.3f} s")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = _load(args)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        s0 = seed_population(cfg)
    except SeedingError as exc:
        print(f"seeding error: {exc}", file=sys.stderr)
        return EXIT_SEED
    config = cfg.engine_config(fault_vote_order=args.inject_fault)
    status = EXIT_OK
    for workers in args.workers:
        try:
            div = compare_runs(s0, cfg.ticks, config, workers)
        except IntegrityError as exc:
            print(f"integrity violation: {exc}", file=sys.stderr)
            return EXIT_INTEGRITY
        if div is None:
            print(f"workers={workers}: identical over {cfg.ticks} ticks")
        else:
            print(f"workers={workers}: DIVERGED at {div}")
            status = EXIT_DIVERGED
    return status


def cmd_bench_cli(args) -> int:
    base = None
    if args.scenario:
        try:
            base = load_scenario(args.scenario)
        except (OSError, ScenarioError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
    kw = {}
    for name in ("grids", "densities", "directions", "field_ratios", "max_periods", "ped_geoms"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = v
    if base is not None:
        kw["base"] = base
    if args.seed is not None or args.chunk_k is not None:
        b = kw.get("base", ScenarioConfig())
        kw["base"] = b.replace(**{k: v for k, v in (("seed", args.seed), ("chunk_k", args.chunk_k)) if v is not None})
    kw.update(ticks=args.ticks, repeats=args.repeats, mode=Mode(args.mode), workers=args.workers)
    spec = SweepSpec.preset(args.preset, **kw) if args.preset else SweepSpec(**kw)
    report = cmd_bench(spec)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            report.write(fh)
    else:
        report.write(sys.stdout)
    return EXIT_OK


def fanout_report(f: FieldSpec) -> str:
    plan = build_write_plan(f)
    oracle_sf, _ = fanout_oracle(f)
    lines = [
        f"geometry      {f.geometry}",
        f"kind          {f.kind.value}",
        f"gain          {f.gain:g}",
        f"decay         {f.decay:g}",
    ]
    if f.kind.directional:
        lines.append(f"orientation   {f.orientation} (cone +/-{f.cone})")
    lines += [
        f"fanout        {plan.fanout}",
        f"oracle fanout {oracle_sf}",
        "sect  contributors",
    ]
    lines += [f"{s:>4}  {n}" for s, n in zip(range(N_SECTS), plan.counts())]
    return "\n".join(lines)


def cmd_fanout(args) -> int:
    w, h = args.geometry
    try:
        f = FieldSpec(FieldKind(args.kind), Footprint(w, h), args.gain, args.decay, args.orientation, args.cone)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    print(fanout_report(f))
    return EXIT_OK


def cmd_plan_memory(args) -> int:
    gw, gh = args.grid
    grid = GridGeometry(gw, gh)
    fanouts = []
    try:
        if args.fanout:
            fanouts = [(None, sf) for sf in args.fanout]
        elif args.ratio:
            fanouts = [(scale_fields(None, r), None) for r in args.ratio]
        else:
            fanouts = [(Footprint(*args.geometry), None)]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    print("geometry,fanout,m_recur_bytes,m_total_bytes,M_total_bytes,M_GiB")
    for geom, sf in fanouts:
        if sf is None:
            sf = recurrent_fanout(geom)
        plan = memory_plan(sf, grid)
        print(f"{geom or '-'},{sf},{plan.m_recur},{plan.m_total},{plan.M_total},{plan.M_gib_display:.1f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="socialfield", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write per-tick metrics")
    run.add_argument("--scenario", required=True)
    run.add_argument("--mode", choices=["seq", "par"], default="seq")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", help="metrics CSV path")
    run.add_argument("--ticks", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--chunk-k", type=int, choices=[2, 4, 8, 16])
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="compare sequential and parallel runs bit for bit")
    val.add_argument("--scenario", required=True)
    val.add_argument("--ticks", type=int, default=10)
    val.add_argument("--workers", type=_csv(int), default=[4], help="comma-separated worker counts")
    val.add_argument("--seed", type=int)
    val.add_argument("--chunk-k", type=int, choices=[2, 4, 8, 16])
    val.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    val.set_defaults(func=cmd_validate)

    bench = sub.add_parser("bench", help="benchmark a sweep of scenarios")
    bench.add_argument("--preset", choices=["grid", "fanout", "period", "combo"])
    bench.add_argument("--scenario", help="base scenario for every case")
    bench.add_argument("--grids", type=_csv(int))
    bench.add_argument("--densities", type=_csv(float))
    bench.add_argument("--directions", type=_csv(Directions))
    bench.add_argument("--field-ratios", type=_csv(int))
    bench.add_argument("--max-periods", type=_csv(int))
    bench.add_argument("--ped-geoms", type=_csv(int))
    bench.add_argument("--ticks", type=int, default=10)
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--mode", choices=["seq", "par"], default="seq")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--chunk-k", type=int, choices=[2, 4, 8, 16])
    bench.add_argument("--out")
    bench.set_defaults(func=cmd_bench_cli)

    fo = sub.add_parser("fanout", help="report a field's write plan and fan-out")
    fo.add_argument("--geometry", type=_pair, default=(7, 7), help="WxH, odd")
    fo.add_argument("--kind", choices=[k.value for k in FieldKind], default=FieldKind.RECURRENT_REPULSIVE.value)
    fo.add_argument("--gain", type=float, default=1.0)
    fo.add_argument("--decay", type=float, default=-0.5)
    fo.add_argument("--orientation", type=int, default=0)
    fo.add_argument("--cone", type=int, default=1)
    fo.set_defaults(func=cmd_fanout)

    pm = sub.add_parser("plan-memory", help="bytes needed to cache every fan-out slot")
    pm.add_argument("--fanout", type=_csv(int), help="comma-separated fan-outs")
    pm.add_argument("--ratio", type=_csv(int), help="field ratios (geometry 7*ratio)")
    pm.add_argument("--geometry", type=_pair, default=(7, 7))
    pm.add_argument("--grid", type=_pair, default=(1000, 1000))
    pm.set_defaults(func=cmd_plan_memory)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
