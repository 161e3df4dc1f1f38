"""Command-line surface: serve the local platform, run the example
pipelines (image labeling, entity resolution), drive simulated workers,
inspect lineage, and validate store files.

Exit codes: 0 success, 1 usage error (synopsis on stderr), 2 runtime error.
Stdout of `run` and `lineage --json` is deterministic for a given store and
seeds; progress and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .canonical import canonical_json, fingerprint, is_fingerprint
from .core import CrowdContext, RunConfig, default_db_path
from .errors import CrowdPipeError
from .lineage import (
    all_events,
    experiment_summary,
    task_history,
    worker_assignments,
)
from .operators import (
    JoinResult,
    build_pair_truth,
    filtered_join,
    simple_join,
    transitive_join,
)
from .platform import (
    HttpClient,
    LocalPlatform,
    make_profiles,
    simulate_workers,
)
from .platform.http_service import PlatformServer
from .platform.simulate import MODE_CONCURRENT, MODE_DETERMINISTIC
from .presenter import image_label_presenter
from .store import StoreState, replay, summarize

logger = logging.getLogger(__name__)

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _UsageError(Exception):
    """Bad invocation discovered after argparse (e.g. missing paired flag)."""


class _Parser(argparse.ArgumentParser):
    """Argparse reports usage errors with exit code 2; this surface reserves
    2 for runtime failures, so usage problems are rethrown and mapped to 1."""

    def error(self, message: str):
        raise _UsageError(f"{self.format_usage().strip()}\n{self.prog}: {message}")


def _load_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _load_jsonl(path: str) -> list[Any]:
    return [json.loads(line) for line in _load_lines(path)]


def _load_truth(path: str) -> dict[str, str]:
    """Truth file: JSON map fingerprint -> label. As a convenience, a key
    that is not a fingerprint is treated as the raw object and hashed."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise _UsageError("truth file must be a JSON object mapping keys to labels")
    return {
        (key if is_fingerprint(key) else fingerprint(key)): str(label)
        for key, label in raw.items()
    }


def _print_json(obj: Any) -> None:
    print(canonical_json(obj))


# -- subcommand handlers -------------------------------------------------------


def _cmd_serve(args: argparse.Namespace) -> int:
    state_path = Path(args.db) if args.db else Path(f"./{args.project}.platform.cpdb")
    platform = LocalPlatform(state_path=state_path)
    server = PlatformServer(
        platform, host=args.host, port=args.port, ui_dir=args.ui_dir
    )
    print(f"platform serving at {server.url} (state: {state_path})", file=sys.stderr)
    sys.stderr.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        platform.close()
    return 0


def _make_context(args: argparse.Namespace) -> CrowdContext:
    config = RunConfig(
        n_assignments=args.assignments,
        poll_interval=args.poll_interval,
        result_timeout=args.timeout,
        rng_seed=args.seed,
    )
    client = HttpClient(args.platform) if args.platform else None
    return CrowdContext(
        args.project, db_path=args.db, platform=client, config=config
    )


def _attach_simulation(ctx: CrowdContext, args: argparse.Namespace, truth: dict) -> None:
    if not args.simulate:
        return
    if args.platform:
        raise _UsageError(
            "--simulate drives the embedded platform; against --platform use "
            "the `simulate` subcommand"
        )
    ctx.attach_simulator(
        make_profiles(args.simulate, accuracy=args.accuracy, seed=args.seed), truth
    )


def _cmd_run_image_label(args: argparse.Namespace) -> int:
    objects = _load_lines(args.input)
    labels = tuple(part.strip() for part in args.labels.split(",") if part.strip())
    truth = _load_truth(args.truth) if args.truth else {}
    if args.simulate and not args.truth:
        raise _UsageError("--simulate requires --truth FILE")
    with _make_context(args) as ctx:
        _attach_simulation(ctx, args, truth)
        data = ctx.crowd_data(objects, args.table)
        data.set_presenter(image_label_presenter(labels))
        data.publish_task()
        data.get_result(blocking=True)
        if args.qc != "none":
            data.quality_control(args.qc)
        if args.json:
            _print_json(data.snapshot())
        else:
            print(data.to_text_table())
    return 0


_JOINS = {"simple": simple_join, "filtered": filtered_join, "transitive": transitive_join}


def _render_join(result: JoinResult, as_json: bool) -> None:
    if as_json:
        _print_json(
            {
                "pairs": [
                    {
                        "left_id": p.left_id,
                        "right_id": p.right_id,
                        "fingerprint": p.pair_fingerprint,
                        "verdict": p.verdict,
                        "source": p.source,
                    }
                    for p in result.pairs
                ],
                "published": result.published,
                "deduced": result.deduced,
                "pruned": result.pruned,
                "inconsistencies": result.inconsistencies,
            }
        )
        return
    for p in result.pairs:
        print(f"{p.left_id:>4} {p.right_id:>4}  {p.verdict:<8} {p.source}")
    print(
        f"pairs={len(result.pairs)} published={result.published} "
        f"deduced={result.deduced} pruned={result.pruned} "
        f"matches={len(result.matches)}"
    )


def _cmd_run_entity_resolution(args: argparse.Namespace) -> int:
    objects = _load_jsonl(args.input)
    truth: dict[str, str] = {}
    if args.clusters:
        with open(args.clusters, "r", encoding="utf-8") as fh:
            clusters = json.load(fh)
        if isinstance(clusters, list):
            truth = build_pair_truth(objects, clusters)
        elif isinstance(clusters, dict):
            truth = {str(k): str(v) for k, v in clusters.items()}
        else:
            raise _UsageError(
                "clusters file must be a JSON list (cluster label per record) "
                "or a JSON object (pair fingerprint -> verdict)"
            )
    if args.simulate and not args.clusters:
        raise _UsageError("--simulate requires --clusters FILE")
    with _make_context(args) as ctx:
        _attach_simulation(ctx, args, truth)
        data = ctx.crowd_data(objects, args.table)
        if args.join == "filtered":
            result = filtered_join(data, tau=args.tau)
        elif args.join == "transitive":
            result = transitive_join(data)
        else:
            result = simple_join(data)
        _render_join(result, args.json)
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    if args.pipeline == "image-label":
        return _cmd_run_image_label(args)
    return _cmd_run_entity_resolution(args)


def _cmd_simulate(args: argparse.Namespace) -> int:
    truth = _load_truth(args.truth)
    profiles = make_profiles(args.workers, accuracy=args.accuracy, seed=args.seed)
    if args.platform:
        client = HttpClient(args.platform)
        try:
            transcript = simulate_workers(client, profiles, truth, mode=args.mode)
        finally:
            client.close()
    else:
        state_path = Path(args.db) if args.db else Path(f"./{args.project}.platform.cpdb")
        with LocalPlatform(state_path=state_path) as platform:
            transcript = simulate_workers(platform, profiles, truth, mode=args.mode)
    if args.json:
        _print_json([entry.to_dict() for entry in transcript])
    else:
        for entry in transcript:
            print(f"{entry.ts} {entry.worker_id} {entry.task_id} {entry.answer}")
    print(f"answered {len(transcript)} assignments", file=sys.stderr)
    return 0


def _lineage_state(db: Path) -> StoreState:
    if not db.exists():
        return StoreState()  # nothing recorded yet: legitimate empty lineage
    return replay(db)


def _cmd_lineage(args: argparse.Namespace) -> int:
    db = Path(args.db) if args.db else default_db_path(args.project)
    state = _lineage_state(db)
    if args.object:
        events = task_history(state, args.project, args.object)
    elif args.worker:
        events = worker_assignments(state, args.project, args.worker)
    else:
        summary = experiment_summary(state, args.project)
        if args.report_dir:
            written = _write_report_files(state, args, summary)
            for p in written:
                print(f"wrote {p}", file=sys.stderr)
        print(canonical_json(summary.to_dict()) if args.json else summary.render_text())
        return 0
    if args.json:
        _print_json([e.to_dict() for e in events])
    else:
        for e in events:
            extra = f" {e.worker_id} {e.answer}" if e.worker_id else ""
            print(f"{e.ts} {e.kind:<9} {e.task_id} {e.object_fingerprint}{extra}")
    return 0


def _write_report_files(state: StoreState, args: argparse.Namespace, summary) -> list[Path]:
    from .report import write_report  # matplotlib import deferred to use

    return write_report(all_events(state, args.project), summary, Path(args.report_dir))


def _cmd_replay(args: argparse.Namespace) -> int:
    state = replay(args.db)
    census = summarize(state)
    if args.json:
        _print_json(census)
    else:
        for key in sorted(census):
            print(f"{key}: {canonical_json(census[key])}")
    if state.dropped_tail:
        print("warning: interrupted final record was dropped", file=sys.stderr)
    return 0


# -- parser --------------------------------------------------------------------


def _add_store_flags(p: argparse.ArgumentParser, default_project: str) -> None:
    p.add_argument("--project", default=default_project, help="project name")
    p.add_argument("--db", default=None, help="store file (default ./<project>.cpdb)")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="input data file")
    p.add_argument("--assignments", type=int, default=3, help="answers per task")
    p.add_argument("--platform", default=None, help="remote platform base URL")
    p.add_argument("--simulate", type=int, default=0, metavar="N",
                   help="answer with N simulated workers on the embedded platform")
    p.add_argument("--accuracy", type=float, default=1.0, help="simulated worker accuracy")
    p.add_argument("--seed", type=int, default=0, help="simulation / run seed")
    p.add_argument("--timeout", type=float, default=60.0, help="result wait timeout (s)")
    p.add_argument("--poll-interval", type=float, default=0.05, help="poll interval (s)")
    p.add_argument("--json", action="store_true", help="machine-readable stdout")


def build_parser() -> _Parser:
    parser = _Parser(prog="crowdpipe", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    serve = sub.add_parser("serve", help="run the local crowdsourcing platform")
    serve.add_argument("--port", type=int, default=7878)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--ui-dir", default=None, help="static worker UI directory")
    _add_store_flags(serve, "crowdpipe")
    serve.set_defaults(func=_cmd_serve)

    run = sub.add_parser("run", help="run an example pipeline")
    run_sub = run.add_subparsers(dest="pipeline", required=True, parser_class=_Parser)

    img = run_sub.add_parser("image-label", help="label objects (one per input line)")
    _add_run_flags(img)
    _add_store_flags(img, "imglabel")
    img.add_argument("--table", default="images", help="table name")
    img.add_argument("--labels", default="Yes,No", help="comma-separated label set")
    img.add_argument("--qc", choices=("mv", "em", "none"), default="mv")
    img.add_argument("--truth", default=None,
                     help="JSON map fingerprint->label for simulated workers")
    img.set_defaults(func=_cmd_run, pipeline="image-label")

    er = run_sub.add_parser("entity-resolution",
                            help="crowd join over JSON-lines records")
    _add_run_flags(er)
    _add_store_flags(er, "entityres")
    er.add_argument("--table", default="records", help="table name")
    er.add_argument("--join", choices=("simple", "filtered", "transitive"),
                    default="simple")
    er.add_argument("--tau", type=float, default=0.5,
                    help="similarity threshold for --join filtered")
    er.add_argument("--clusters", default=None,
                    help="JSON cluster labels (list) or pair truth (object)")
    er.set_defaults(func=_cmd_run, pipeline="entity-resolution")

    sim = sub.add_parser("simulate", help="drive simulated workers over a platform")
    sim.add_argument("--workers", type=int, required=True)
    sim.add_argument("--accuracy", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--truth", required=True,
                     help="JSON map fingerprint->label")
    sim.add_argument("--platform", default=None, help="remote platform base URL")
    sim.add_argument("--mode", choices=(MODE_DETERMINISTIC, MODE_CONCURRENT),
                     default=MODE_DETERMINISTIC)
    sim.add_argument("--json", action="store_true")
    _add_store_flags(sim, "crowdpipe")
    sim.set_defaults(func=_cmd_simulate)

    lin = sub.add_parser("lineage", help="inspect task/worker history in a store")
    lin.add_argument("--project", required=True)
    lin.add_argument("--db", default=None,
                     help="store file (default ./<project>.cpdb or CROWDPIPE_DB)")
    lin.add_argument("--object", default=None, metavar="FINGERPRINT",
                     help="history of one object")
    lin.add_argument("--worker", default=None, metavar="WORKER_ID",
                     help="assignments of one worker")
    lin.add_argument("--summary", action="store_true",
                     help="experiment census (default)")
    lin.add_argument("--report-dir", default=None,
                     help="also render report.csv + figures into this directory")
    lin.add_argument("--json", action="store_true")
    lin.set_defaults(func=_cmd_lineage)

    rep = sub.add_parser("replay", help="validate a store file and print its census")
    rep.add_argument("--db", required=True, help="store file to replay")
    rep.add_argument("--json", action="store_true")
    rep.set_defaults(func=_cmd_replay)

    return parser


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Parse argv and execute one subcommand; returns the process exit code."""
    logging.basicConfig(
        level=logging.WARNING, stream=sys.stderr, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "object", None) and getattr(args, "worker", None):
            raise _UsageError("--object and --worker are mutually exclusive")
        return args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_EXIT
    except CrowdPipeError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
