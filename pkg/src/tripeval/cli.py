"""Operator entry point: synth, plan, evaluate, rank, optimize, analyze.

Every command prints one machine-readable JSON summary line on success and
exits 0. Usage errors exit 2, data errors 3, transport errors 4. With --seed
and --mock every command is fully reproducible offline.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import analysis, dataio, evorag, llm, metrics, strategies
from .judge import Judge, LlmJudge, RuleJudge

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_TRANSPORT = 4


def _summary(**fields) -> None:
    print(json.dumps(fields, ensure_ascii=False, sort_keys=True))


def _build_client(args: argparse.Namespace) -> llm.ChatClient:
    mock = getattr(args, "mock", None)
    if mock is None:
        return llm.HttpChatClient()
    if mock is True:
        return llm.MockPlannerClient(seed=getattr(args, "seed", 0))
    payload = json.loads(Path(mock).read_text(encoding="utf-8"))
    replies = payload["replies"] if isinstance(payload, dict) else payload
    if not isinstance(replies, list):
        raise dataio.SchemaError(str(mock), "file", "expected a JSON array or {'replies': [...]}")
    return llm.ScriptedChatClient([str(r) for r in replies])


def _build_judge(args: argparse.Namespace) -> Judge:
    if args.judge == "rule":
        return RuleJudge()
    return LlmJudge(_build_client(args))


def _parallelism(args: argparse.Namespace, client: llm.ChatClient) -> int:
    requested = max(1, getattr(args, "parallelism", 1))
    # Scripted replays pop replies in call order, so they must stay sequential.
    if isinstance(client, llm.ScriptedChatClient):
        return 1
    return requested


def _add_mock_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mock",
        nargs="?",
        const=True,
        default=None,
        metavar="REPLAY_JSON",
        help="answer LLM calls offline: bare flag uses the deterministic mock "
        "planner, a file path replays scripted replies in order",
    )
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tripeval")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries", type=int, default=5)
    p.add_argument("--pois", type=int, default=12)
    p.add_argument("--trajectories", type=int, default=8)
    p.add_argument("--out", default="dataset")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plan", help="generate plans for every query in a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--strategy", default="direct", choices=[k.value for k in strategies.StrategyKind])
    p.add_argument("--m", type=int, default=None, help="trajectory count for rag")
    p.add_argument(
        "--compression",
        default="none",
        choices=[c.value for c in strategies.Compression],
        help="post-retrieval compression (rag only)",
    )
    p.add_argument("--out", default="plans.json")
    p.add_argument("--parallelism", type=int, default=1)
    _add_mock_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("evaluate", help="score a plans file against its dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--plans", required=True)
    p.add_argument("--judge", default="rule", choices=["rule", "llm"])
    p.add_argument("--out", default="reports.json")
    p.add_argument("--parallelism", type=int, default=1)
    _add_mock_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="rank methods from per-method report files")
    p.add_argument(
        "--reports",
        nargs="+",
        required=True,
        metavar="NAME=PATH",
        help="one report file per method, labeled name=path",
    )
    p.add_argument("--out", default="ranks.csv")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("optimize", help="run the evolutionary optimizer per query")
    p.add_argument("--dataset", required=True)
    p.add_argument("--generations", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--judge", default="rule", choices=["rule", "llm"])
    p.add_argument("--out", default="best_plans.json")
    p.add_argument("--history", default="history.jsonl")
    _add_mock_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("analyze", help="win-rate or retrieval-sensitivity statistics")
    p.add_argument("kind", choices=["winrate", "sensitivity"])
    p.add_argument("--a", help="report file of the challenger (winrate)")
    p.add_argument("--b", help="report file of the baseline (winrate)")
    p.add_argument("--dataset", help="dataset directory (sensitivity)")
    p.add_argument("--m", default="1,4,8", help="comma-separated trajectory counts (sensitivity)")
    p.add_argument("--clean", action="store_true", help="add the denoised condition (sensitivity)")
    p.add_argument("--judge", default="rule", choices=["rule", "llm"])
    p.add_argument("--out", default="analysis.csv")
    _add_mock_flags(p)
    p.set_defaults(func=cmd_analyze)
    return parser


def cmd_synth(args: argparse.Namespace) -> None:
    out = dataio.synth_dataset(args.seed, args.queries, args.pois, args.trajectories, args.out)
    _summary(command="synth", ok=True, out=str(out), queries=args.queries, seed=args.seed)


def cmd_plan(args: argparse.Namespace) -> None:
    if args.strategy == "rag" and (args.m is None or args.m < 1):
        raise UsageError("--strategy rag needs --m >= 1")
    instances = dataio.load_dataset(args.dataset)
    config = strategies.StrategyConfig(
        kind=strategies.StrategyKind(args.strategy),
        m=args.m if args.strategy == "rag" else None,
        compression=strategies.Compression(args.compression),
        seed=args.seed,
    )
    client = _build_client(args)
    workers = _parallelism(args, client)

    def one(instance):
        return instance.query.id, strategies.generate_plan(instance, config, client)

    if workers == 1:
        pairs = [one(inst) for inst in instances]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(one, instances))
    dataio.save_plans(dict(pairs), args.out)
    _summary(command="plan", ok=True, strategy=config.label(), queries=len(pairs), out=args.out)


def cmd_evaluate(args: argparse.Namespace) -> None:
    instances = {inst.query.id: inst for inst in dataio.load_dataset(args.dataset)}
    plans = dataio.load_plans(args.plans)
    missing = sorted(set(plans) - set(instances))
    if missing:
        raise dataio.CrossRefError(missing[0], "plan references a query absent from the dataset")
    judge = _build_judge(args)
    workers = max(1, args.parallelism) if args.judge == "rule" else 1

    def one(qid):
        return qid, metrics.evaluate(plans[qid], instances[qid], judge)

    qids = sorted(plans)
    if workers == 1:
        pairs = [one(qid) for qid in qids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(one, qids))
    dataio.save_reports(dict(pairs), args.out)
    _summary(command="evaluate", ok=True, judge=args.judge, queries=len(pairs), out=args.out)


def _parse_labeled(specs: list[str]) -> dict[str, str]:
    out = {}
    for spec in specs:
        # Split on the last '=' so labels like rag(m=4) survive.
        name, sep, path = spec.rpartition("=")
        if not sep:
            name, path = Path(spec).stem, spec
        out[name] = path
    return out


def cmd_rank(args: argparse.Namespace) -> None:
    table = {}
    for name, path in _parse_labeled(args.reports).items():
        reports = dataio.load_reports(path)
        if not reports:
            raise dataio.SchemaError(path, "file", "report file is empty")
        table[name] = metrics.aggregate_reports(list(reports.values()))
    ranked = metrics.rank_methods(table)
    lines = ["method,R_S,R_T,R_P,R_R,R_C"]
    for name, ranks in ranked.items():
        lines.append(
            f"{name},{ranks.r_s:.2f},{ranks.r_t:.2f},{ranks.r_p:.2f},{ranks.r_r:.2f},{ranks.r_c:.2f}"
        )
    dataio.atomic_write_text(args.out, "\n".join(lines) + "\n")
    _summary(command="rank", ok=True, methods=len(ranked), out=args.out)


def cmd_optimize(args: argparse.Namespace) -> None:
    instances = dataio.load_dataset(args.dataset)
    client = _build_client(args)
    judge = _build_judge(args)
    config = evorag.EvoConfig(args.generations, args.alpha, args.beta, args.seed)
    best: dict[str, object] = {}
    history_lines = []
    for instance in instances:
        plan, history = evorag.run(instance, client, judge, config)
        best[instance.query.id] = plan
        for generation, snapshot in enumerate(history):
            history_lines.append(
                json.dumps(
                    {"query_id": instance.query.id, "generation": generation, "population": snapshot},
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
    dataio.save_plans(best, args.out)  # type: ignore[arg-type]
    dataio.atomic_write_text(args.history, "\n".join(history_lines) + "\n")
    _summary(
        command="optimize",
        ok=True,
        queries=len(best),
        generations=args.generations,
        out=args.out,
        history=args.history,
    )


def cmd_analyze(args: argparse.Namespace) -> None:
    if args.kind == "winrate":
        if not args.a or not args.b:
            raise UsageError("analyze winrate needs --a and --b report files")
        reports_a = dataio.load_reports(args.a)
        reports_b = dataio.load_reports(args.b)
        rates = {
            metric: analysis.win_rate(reports_a, reports_b, metric)
            for metric in ("dmr", "dur", "tbr", "str", "pp", "pr", "tsr")
        }
        analysis.write_win_rate_csv(args.out, rates)
        _summary(command="analyze", kind="winrate", ok=True, out=args.out)
        return
    if not args.dataset:
        raise UsageError("analyze sensitivity needs --dataset")
    instances = dataio.load_dataset(args.dataset)
    clean = None
    if args.clean:
        noise = dataio.load_noise(args.dataset)
        clean = [dataio.denoise_instance(inst, noise.get(inst.query.id, [])) for inst in instances]
    m_values = [int(v) for v in args.m.split(",") if v.strip()]
    client = _build_client(args)
    judge = _build_judge(args)
    rows = analysis.sensitivity_sweep(instances, m_values, client, judge, clean)
    analysis.write_sensitivity_csv(args.out, rows)
    _summary(command="analyze", kind="sensitivity", ok=True, rows=len(rows), out=args.out)


class UsageError(ValueError):
    pass


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(json.dumps({"ok": False, "error": "usage", "detail": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    except (llm.TransportError, llm.AuthError, strategies.StrategyFailure, evorag.EvoRunError) as exc:
        print(json.dumps({"ok": False, "error": "transport", "detail": str(exc)}), file=sys.stderr)
        return EXIT_TRANSPORT
    except (ValueError, OSError) as exc:
        # Schema, cross-reference and input validation problems.
        print(json.dumps({"ok": False, "error": "data", "detail": str(exc)}), file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
