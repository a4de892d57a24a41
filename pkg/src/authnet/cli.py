"""Command-line front end: ``authnet <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from authnet.contagion import EpidemicConfig, Model, Strategy, run_ensemble
from authnet.config import RunConfig, load_config, with_overrides
from authnet.errors import AnalysisError, AuthnetError, ConfigError, ValidationError
from authnet.escalators import (
    TierOrder,
    account_exposure_matrix,
    escalator_hosts,
    find_escalators,
    local_admin_session_reach,
    write_exposure_csv,
)
from authnet.gatekeepers import Betweenness, TargetQuery, WeightBase, find_gatekeepers, resolve_targets
from authnet.graph import DirGraph, graph_stats
from authnet.ingest.countermeasures import (
    Countermeasure,
    Network,
    apply_countermeasure,
    build_network,
    transform_inputs,
)
from authnet.ingest.records import write_jsonl
from authnet.io import read_graphml, write_dot, write_graphml
from authnet.spreaders import compare_countermeasure, descendants_subgraph, find_spreaders, ingress_risk
from authnet.synth import SynthSpec, gen_synthetic

log = logging.getLogger("authnet")

EXIT_OK, EXIT_VALIDATION, EXIT_ANALYSIS = 0, 2, 3


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(cfg: RunConfig, name: str, obj: Any) -> None:
    text = _dump(obj)
    if cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        (cfg.out_dir / name).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _sidecar(cfg: RunConfig, name: str) -> Path | None:
    if cfg.out_dir is None:
        return None
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir / name


def _network(cfg: RunConfig) -> Network:
    inputs = cfg.load_inputs()
    for m in cfg.countermeasures:
        inputs = transform_inputs(inputs, m)
    return build_network(inputs, cluster=cfg.cluster)


def _tiers(cfg: RunConfig, net: Network) -> TierOrder:
    if not cfg.tier_order:
        raise ConfigError("no tier ordering configured; set [tiers] order or pass --tiers")
    return TierOrder(cfg.tier_order, {a.id: a.tier for a in net.inputs.accounts})


def _pick(net: Network, which: str) -> DirGraph:
    return net.local if which == "local" else net.combined


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args, cfg: RunConfig) -> int:
    if cfg.out_dir is None:
        raise ConfigError("gen needs --out DIR")
    spec = SynthSpec(
        n_systems=args.systems,
        n_accounts=args.accounts,
        admin_edge_density=args.edges / args.systems if args.systems else 0.0,
        session_count=args.sessions,
        seed=cfg.seed,
        planted_hub=not args.no_plant,
        planted_chain=0 if args.no_plant else args.chain,
        planted_cross_tier=not args.no_plant,
    )
    net = gen_synthetic(spec)
    net.write(cfg.out_dir)
    sys.stdout.write(_dump({
        "out": str(cfg.out_dir),
        "systems": len(net.inputs.systems),
        "access_records": len(net.inputs.records),
        "accounts": len(net.inputs.accounts),
        "session_events": len(net.inputs.events),
        "planted": {"hub": net.planted.hub, "chain": net.planted.chain, "cross_tier": net.planted.cross_tier},
    }))
    return EXIT_OK


def cmd_build(args, cfg: RunConfig) -> int:
    net = _network(cfg)
    if cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        write_graphml(net.local, cfg.out_dir / "local.graphml", net.kinds)
        write_graphml(net.combined, cfg.out_dir / "combined.graphml", net.kinds)
        write_jsonl(cfg.out_dir / "sessions.jsonl", net.sessions)
        (cfg.out_dir / "clusters.json").write_text(_dump(net.clusters.to_json()), encoding="utf-8")
    _emit(cfg, "build.json", {
        "local": {"V": len(net.local), "E": net.local.pair_count},
        "combined": {"V": len(net.combined), "E": net.combined.pair_count},
        "sessions": len(net.sessions),
        "active_sessions": sum(1 for s in net.sessions if s.active),
        "chainable_sessions": sum(1 for s in net.sessions if s.chainable),
        "countermeasures": [str(m) for m in cfg.countermeasures],
    })
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    rows = []
    if args.graph:
        for path in args.graph:
            g, _ = read_graphml(path)
            rows.append({"authnet": Path(path).stem, **graph_stats(g).as_row()})
    else:
        net = _network(cfg)
        rows.append({"authnet": "local", **graph_stats(net.local).as_row()})
        rows.append({"authnet": "combined", **graph_stats(net.combined).as_row()})
    _emit(cfg, "stats.json", rows)
    return EXIT_OK


def cmd_spreaders(args, cfg: RunConfig) -> int:
    net = _network(cfg)
    g = _pick(net, args.authnet)
    report = find_spreaders(g, cfg.dbscan, mode=args.weighting, max_paths=args.max_paths)
    report.kinds = net.kinds
    out = report.to_json()
    if not args.full:
        out["vertices"] = [row for row in out["vertices"] if row["is_outlier"]]
    out["authnet"] = args.authnet
    out["ingress_risk"] = {
        pop: ingress_risk(report.outliers, {v: net.kinds.get(v, "system") for v in g.order}, pop)
        for pop in ("all", "workstation", "server")
        if pop == "all" or any(net.kinds.get(v) == pop for v in g.order)
    }
    csv_path = _sidecar(cfg, "spreaders.csv")
    if csv_path:
        report.write_csv(csv_path)
        dot_dir = csv_path.parent / "spreaders"
        dot_dir.mkdir(exist_ok=True)
        for v in report.outliers:
            name = "".join(c if c.isalnum() or c in "-_." else "_" for c in v)
            write_dot(descendants_subgraph(g, v), dot_dir / f"{name}.dot", name=v,
                      kinds=net.kinds, highlight={v})
    _emit(cfg, "spreaders.json", out)
    return EXIT_OK


def _escalator_summary(net: Network, tiers: TierOrder) -> tuple[list, dict]:
    if net.window_end is None:
        return [], {"escalators": 0, "escalator_hosts": 0}
    esc = find_escalators(net.combined, net.sessions, tiers, net.window_end, rep_of=net.clusters.rep_of)
    reach, hosts = local_admin_session_reach(net.local, net.combined, net.sessions, net.clusters.rep_of)
    return esc, {
        "escalators": len(esc),
        "escalator_hosts": len(escalator_hosts(esc)),
        "local_admin_reaching": len(reach),
        "reachable_session_hosts": len(hosts),
        "combined_edges": net.combined.pair_count,
    }


def cmd_escalators(args, cfg: RunConfig) -> int:
    net = _network(cfg)
    tiers = _tiers(cfg, net)
    esc, summary = _escalator_summary(net, tiers)
    reach, hosts = local_admin_session_reach(net.local, net.combined, net.sessions, net.clusters.rep_of)
    matrix = account_exposure_matrix(net.combined, net.sessions, rep_of=net.clusters.rep_of)
    csv_path = _sidecar(cfg, "exposure_matrix.csv")
    if csv_path:
        write_exposure_csv(matrix, tiers, csv_path)
    _emit(cfg, "escalators.json", {
        "summary": summary,
        "escalators": [e.to_json() for e in esc],
        "local_admin_reach": {"systems": sorted(reach), "session_hosts": sorted(hosts)},
        "exposure_entries": len(matrix),
    })
    return EXIT_OK


def cmd_gatekeepers(args, cfg: RunConfig) -> int:
    if not args.targets:
        raise ConfigError("gatekeepers needs --targets <file|sessions:tier=LABEL>")
    net = _network(cfg)
    targets = resolve_targets(args.targets, net.sessions, {a.id: a.tier for a in net.inputs.accounts},
                              net.clusters.rep_of)
    missing = sorted(t for t in targets if t not in net.combined)
    if missing:
        raise ValidationError(f"targets not in the authnet: {', '.join(missing[:10])}")
    if not targets:
        raise AnalysisError(f"selector {args.targets!r} matched no targets")
    model = Model(args.model)
    betweenness = Betweenness(args.betweenness) if args.betweenness else (
        Betweenness.WEIGHTED_MAX_OVER_TARGETS if model is Model.SIR else Betweenness.SUM_OVER_TARGETS)
    query = TargetQuery(
        targets=frozenset(targets),
        mode=model,
        detect_prob=cfg.detect_prob if model is Model.SIR else 0.0,
        betweenness=betweenness,
        dbscan=cfg.dbscan,
        weight_base=WeightBase(args.weight_base),
        top_k=cfg.top_k,
        prune_dominated=args.prune_dominated,
    )
    report = find_gatekeepers(query, _pick(net, args.authnet))
    gml = _sidecar(cfg, "target_subgraph.graphml")
    if gml:
        write_graphml(report.subgraph, gml, net.kinds)
    _emit(cfg, "gatekeepers.json", report.to_json())
    return EXIT_OK


def cmd_whatif(args, cfg: RunConfig) -> int:
    if not args.measure:
        raise ConfigError("whatif needs at least one --measure")
    before = _network(cfg)
    measures = [Countermeasure.parse(m) for m in args.measure]
    inputs = before.inputs
    for m in measures[:-1]:
        inputs = transform_inputs(inputs, m)
    after = apply_countermeasure(inputs, measures[-1], cluster=cfg.cluster)
    out: dict[str, Any] = {"measures": [str(m) for m in measures]}
    for name in ("local", "combined"):
        gb, ga = _pick(before, name), _pick(after, name)
        rows, unmatched = compare_countermeasure(gb, ga, cfg.top_k, before.clusters, after.clusters)
        out[name] = {
            "edges_before": gb.pair_count,
            "edges_after": ga.pair_count,
            "stats_before": graph_stats(gb).as_row(),
            "stats_after": graph_stats(ga).as_row(),
            "top": [r.to_json() for r in rows],
            "unmatched": unmatched,
        }
    if cfg.tier_order:
        _, sb = _escalator_summary(before, _tiers(cfg, before))
        _, sa = _escalator_summary(after, _tiers(cfg, after))
        out["escalators"] = {"before": sb, "after": sa}
    _emit(cfg, "whatif.json", out)
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    net = _network(cfg)
    g = _pick(net, args.authnet)
    model = Model(args.model)
    targets: frozenset[str] = frozenset()
    if args.targets:
        targets = resolve_targets(args.targets, net.sessions, {a.id: a.tier for a in net.inputs.accounts},
                                  net.clusters.rep_of)
    ecfg = EpidemicConfig(
        model=model,
        detect_prob=cfg.detect_prob if model is Model.SIR else 0.0,
        strategy=Strategy(args.strategy),
        targets=targets,
        master_seed=cfg.seed,
        max_scenarios=args.max_scenarios,
    )
    result = run_ensemble(g, ecfg, threads=cfg.threads, keep_traces=cfg.out_dir is not None)
    gml = _sidecar(cfg, "infection.graphml")
    if gml:
        write_graphml(result.graph, gml, net.kinds)
        result.write_traces(cfg.out_dir / "traces.jsonl")
    top = sorted(result.infections.items(), key=lambda kv: (-kv[1], kv[0]))[: cfg.top_k]
    _emit(cfg, "simulate.json", {
        "model": model.value,
        "detect_prob": ecfg.detect_prob,
        "strategy": ecfg.strategy.value,
        "scenarios": result.scenarios,
        "complete": result.complete,
        "infection_edges": result.graph.pair_count,
        "authnet_edges": g.pair_count,
        "most_infected": [{"vertex": v, "count": c} for v, c in top],
    })
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "build": cmd_build,
    "stats": cmd_stats,
    "spreaders": cmd_spreaders,
    "escalators": cmd_escalators,
    "gatekeepers": cmd_gatekeepers,
    "whatif": cmd_whatif,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--data", help="directory holding the *.jsonl inputs")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output directory for reports and sidecars")
    common.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    common.add_argument("--tiers", help="tier labels, highest first, comma separated")
    common.add_argument("--cluster", action="store_true", help="merge similar systems before analysis")
    common.add_argument("--top-k", type=int, dest="top_k")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="authnet", description="Credential-chaining analysis of authentication networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="write a synthetic network")
    p.add_argument("--systems", type=int, default=3500)
    p.add_argument("--edges", type=int, default=10000, help="approximate local-admin edge count")
    p.add_argument("--sessions", type=int, default=400)
    p.add_argument("--accounts", type=int, default=60)
    p.add_argument("--chain", type=int, default=6, help="planted chain length in hops")
    p.add_argument("--no-plant", action="store_true", help="skip planted hub, chain and session pair")

    sub.add_parser("build", parents=[common], help="build authnets, write GraphML")

    p = sub.add_parser("stats", parents=[common], help="summary statistics per authnet")
    p.add_argument("--graph", nargs="+", help="GraphML files instead of raw inputs")

    for name, helptext in (("spreaders", "spreader outliers"), ("simulate", "epidemic ensemble"),
                           ("gatekeepers", "gatekeepers around a target set")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--authnet", choices=("local", "combined"),
                       default="local" if name == "spreaders" else "combined")
        if name == "spreaders":
            p.add_argument("--minpts", type=int)
            p.add_argument("--epsilon")
            p.add_argument("--weighting", choices=("equal", "factorial"), default="equal",
                           help="path weighting for communicability betweenness")
            p.add_argument("--max-paths", type=int, dest="max_paths")
            p.add_argument("--full", action="store_true", help="include every vertex in the JSON report")
        else:
            p.add_argument("--targets", help="target file (one id per line) or sessions:tier=LABEL")
            p.add_argument("--model", choices=("SI", "SIR"), default="SI")
            p.add_argument("--detect-prob", type=float, dest="detect_prob")
        if name == "gatekeepers":
            p.add_argument("--minpts", type=int)
            p.add_argument("--epsilon")
            p.add_argument("--betweenness", choices=[b.value for b in Betweenness])
            p.add_argument("--weight-base", choices=[w.value for w in WeightBase], default="survival")
            p.add_argument("--prune-dominated", action="store_true")
        if name == "simulate":
            p.add_argument("--strategy", choices=[s.value for s in Strategy], default="random")
            p.add_argument("--max-scenarios", type=int, dest="max_scenarios")

    sub.add_parser("escalators", parents=[common], help="cross-tier escalators")

    p = sub.add_parser("whatif", parents=[common], help="rebuild under countermeasures and compare")
    p.add_argument("--measure", action="append",
                   help="disable-local-remote | remote-credential-guard | protected-users:a,b (repeatable)")
    return parser


def _report_error(exc: BaseException, code: int, as_json: bool) -> None:
    if as_json:
        payload = {"error": type(exc).__name__, "message": str(exc), "exit": code}
        if getattr(exc, "offending", None):
            payload["offending"] = [str(o) for o in exc.offending]
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"error: {exc}\n")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "--json-errors" in argv
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s", stream=sys.stderr)
        cfg = with_overrides(
            load_config(args.config),
            data=args.data, out=args.out, seed=args.seed, threads=args.threads,
            detect_prob=getattr(args, "detect_prob", None), top_k=args.top_k, cluster=args.cluster,
            minpts=getattr(args, "minpts", None), epsilon=getattr(args, "epsilon", None), tiers=args.tiers,
        )
        return COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        _report_error(exc, EXIT_VALIDATION, as_json)
        return EXIT_VALIDATION
    except AnalysisError as exc:
        _report_error(exc, EXIT_ANALYSIS, as_json)
        return EXIT_ANALYSIS
    except AuthnetError as exc:
        _report_error(exc, EXIT_ANALYSIS, as_json)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
