"""Operator command line: ingest, index, train-embeddings, serve, simulate, report."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .analytics import DataIntegrityError, Logs, NoLogs, build_report, render_text, write_report
from .config import ENV_CONFIG, load_config
from .corpus import DocumentNotFound
from .experiment import CLICKS_LOG, DELIVERIES_LOG, UserModel, simulate
from .synthetic import make_documents, write_corpus
from .workspace import MissingArtifact, Workspace

log = logging.getLogger("relarec")


def cmd_ingest(ws: Workspace, args) -> int:
    summary = ws.store().ingest_file(args.path)
    print(json.dumps({"accepted": summary.accepted, "rejected": summary.rejected}))
    for r in summary.rejections[:20]:
        print(f"line {r.line}: {r.reason}" + (f" ({r.doc_id})" if r.doc_id else ""), file=sys.stderr)
    if summary.rejected > 20:
        print(f"... {summary.rejected - 20} more rejections", file=sys.stderr)
    return 0


def cmd_synth_corpus(ws: Workspace, args) -> int:
    write_corpus(args.out, make_documents(args.docs, seed=args.seed))
    print(f"wrote {args.docs} records to {args.out}")
    return 0


def cmd_index(ws: Workspace, args) -> int:
    if args.algo == "terms":
        for name, index in ws.build_terms(args.scenario).items():
            print(f"{name}: {index.doc_count} documents, {len(index.postings)} terms")
        return 0
    dump = None
    if args.dump == "-":
        dump = sys.stdout
    elif args.dump:
        dump = open(args.dump, "w", encoding="utf-8")
    try:
        built = ws.build_keyphrases(args.scenario, dump=dump)
    finally:
        if dump not in (None, sys.stdout):
            dump.close()
    if args.dump != "-":
        for name, index in built.items():
            n = sum(len(v) for v in index.keyphrases.values())
            print(f"{name}: {index.doc_count} documents, {n} keyphrases")
    return 0


def cmd_train(ws: Workspace, args) -> int:
    for name, model in ws.train_embeddings(args.scenario, seed=args.seed).items():
        print(f"{name}: {len(model.doc_ids)} vectors, loss {model.loss_history[0]:.4f} -> {model.loss_history[-1]:.4f}")
    return 0


def cmd_serve(ws: Workspace, args) -> int:
    import uvicorn

    from .service import create_app

    engine = ws.engine()
    app = create_app(engine, ws.store(), debug=args.debug)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_simulate(ws: Workspace, args) -> int:
    log_dir = Path(args.logs) if args.logs else ws.log_dir
    if not args.append:
        for name in (DELIVERIES_LOG, CLICKS_LOG):
            (log_dir / name).unlink(missing_ok=True)
    sim = ws.config["simulator"]
    seed = ws.config["seed"] if args.seed is None else args.seed
    start = datetime.fromisoformat(str(sim.get("start", "2017-03-01"))).replace(tzinfo=timezone.utc)
    with ws.engine(log_dir=log_dir, persist_state=False) as engine:
        summary = simulate(engine, UserModel.from_dict(sim), args.requests, seed,
                           days=args.days or int(sim.get("days", 30)), start=start,
                           scenario_weights=sim.get("scenario_weights") or None)
    print(json.dumps(summary.__dict__))
    return 0


def cmd_report(ws: Workspace, args) -> int:
    log_dir = Path(args.logs) if args.logs else ws.log_dir
    logs = Logs.load(log_dir)
    buckets = [tuple(b) for b in ws.config["analytics"]["count_buckets"]]
    report = build_report(logs, buckets)
    out = Path(args.out) if args.out else ws.root / "report"
    write_report(report, out, svg=args.svg)
    sys.stdout.write(render_text(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relarec", description=__doc__)
    parser.add_argument("--workdir", default=os.environ.get("RELAREC_WORKDIR", "relarec-data"),
                        help="working directory holding corpus, indexes, models and logs "
                             "(default: $RELAREC_WORKDIR or ./relarec-data)")
    parser.add_argument("--config", help=f"YAML/JSON config file (default: ${ENV_CONFIG})")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load newline-delimited JSON documents into the store")
    p.add_argument("path", help="ingestion file (one JSON object per line)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth-corpus", help="write a topic-clustered synthetic corpus file")
    p.add_argument("--docs", type=int, default=1000, help="number of documents (default 1000)")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    p.add_argument("--out", required=True, help="output ingestion file")
    p.set_defaults(func=cmd_synth_corpus)

    p = sub.add_parser("index", help="build the term or keyphrase index for each scenario")
    p.add_argument("--algo", choices=["terms", "keyphrase"], required=True, help="which index to build")
    p.add_argument("--scenario", action="append", help="restrict to this scenario's corpus filter (repeatable)")
    p.add_argument("--dump", help="also write the keyphrase dump here ('-' for stdout)")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("train-embeddings", help="train document embeddings for each scenario")
    p.add_argument("--scenario", action="append", help="restrict to this scenario's corpus filter (repeatable)")
    p.add_argument("--seed", type=int, help="training seed (default: embeddings.seed from config)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="run the HTTP recommendation service")
    p.add_argument("--host", default="127.0.0.1", help="bind address (default 127.0.0.1)")
    p.add_argument("--port", type=int, default=8000, help="port (default 8000)")
    p.add_argument("--debug", action="store_true", help="expose arm, parameters and scores in responses")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", help="run synthetic users against the engine and write logs")
    p.add_argument("--requests", type=int, default=10_000, help="number of delivery requests (default 10000)")
    p.add_argument("--seed", type=int, help="simulation seed (default: seed from config)")
    p.add_argument("--days", type=int, help="simulated days to spread requests over (default: simulator.days)")
    p.add_argument("--logs", help="log directory (default: <workdir>/logs)")
    p.add_argument("--append", action="store_true", help="append to existing logs instead of replacing them")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="CTR tables, chart data and significance tests from the logs")
    p.add_argument("--logs", help="log directory (default: <workdir>/logs)")
    p.add_argument("--out", help="output directory for report.txt/report.jsonl (default: <workdir>/report)")
    p.add_argument("--svg", action="store_true", help="also render SVG charts")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ws = Workspace(args.workdir, load_config(args.config))
        return args.func(ws, args)
    except (MissingArtifact, NoLogs, DataIntegrityError, DocumentNotFound, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
