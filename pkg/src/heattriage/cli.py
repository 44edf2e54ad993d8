"""Command-line front door: ingest, episodes, label, train, hac, rank, gain, synth.

Exit codes: 0 success, 1 usage error, 2 data error.  Query subcommands take
``--json`` for machine-readable output identical to the HTTP service's.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .errors import TriageError, ValidationError
from .hac import METHOD_HEAT_MODEL
from .model import Hyperparams, LabeledPair
from .synth import ScenarioSpec, asn_entries, generate
from .workspace import WORKSPACE_ENV, Workspace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

HEAT_PROMPT = """Heat levels:
  0  no relation to the critical event
  1  reconnaissance that may have informed it
  2  exploitation/access that enabled it
  3  objective-level action directly tied to it (exfil/DoS/data access)"""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; usage errors are exit 1
        raise _UsageError(message)


def _fmt_time(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%d %H:%M:%S")


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _episode_summary(ep: dict) -> str:
    sig = ", ".join(ep["signatures"][:2]) + (", ..." if len(ep["signatures"]) > 2 else "")
    return (
        f"{_fmt_time(ep['peak_time'])}  {ep['stage']:<22} alerts={ep['alert_count']:<5} "
        f"src={','.join(ep['sources'][:2])} dst={','.join(ep['targets'][:2])} sig=[{sig}]"
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="heattriage", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--workspace",
        default=os.environ.get(WORKSPACE_ENV, "workspace"),
        help=f"workspace directory (default: ${WORKSPACE_ENV} or ./workspace)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an EVE JSON file into episodes")
    p.add_argument("eve", help="newline-delimited EVE JSON file")
    p.add_argument("--mode", choices=["ip", "asn"], default=None)
    p.add_argument("--mapping", help="stage mapping JSON file")
    p.add_argument("--vocab", help="stage vocabulary JSON file")
    p.add_argument("--asn-table", help="cidr,asn CSV (required for --mode asn)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("episodes", help="list episodes")
    p.add_argument("--key")
    p.add_argument("--stage")
    p.add_argument("--from", dest="t_from", type=float)
    p.add_argument("--to", dest="t_to", type=float)
    p.add_argument("--page", type=int, default=1)
    p.add_argument("--page-size", type=int, default=50)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("iocs", help="list candidate critical alerts")
    p.add_argument("--signature")
    p.add_argument("--severity", type=int, help="keep alerts with severity <= N")
    p.add_argument("--limit", type=int, default=50)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("label", help="record analyst heat labels for an IoC")
    p.add_argument("--ioc", required=True, help="critical alert id")
    p.add_argument("--interactive", action="store_true")
    p.add_argument("--from-file", help="JSONL of labeled pairs to append")
    p.add_argument("--annotator", default="analyst")
    p.add_argument("--lookback", type=float, default=None)
    p.add_argument("--limit", type=int, default=50, help="episodes to prompt for (nearest first)")

    p = sub.add_parser("train", help="train a heat model from the label store")
    p.add_argument("--labels", help="JSONL label file (default: workspace label store)")
    p.add_argument("--family", choices=["gbrt", "mlp"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="also write the model artifact to this path")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("finetune", help="retrain the active model with extra labels")
    p.add_argument("--labels", required=True, help="JSONL of new labeled pairs")
    p.add_argument("--base", help="base model version (default: active)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("hac", help="extract the campaign for an IoC")
    p.add_argument("--ioc", required=True)
    p.add_argument("--model")
    p.add_argument("--threshold", type=float)
    p.add_argument("--lookback", type=float)
    p.add_argument("--method", default=METHOD_HEAT_MODEL)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("gain", help="score one IoC's campaign")
    p.add_argument("--ioc", required=True)
    p.add_argument("--model")
    p.add_argument("--threshold", type=float)
    p.add_argument("--lookback", type=float)
    p.add_argument("--method", default=METHOD_HEAT_MODEL)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("rank", help="rank candidate IoCs by campaign gain")
    p.add_argument("--model")
    p.add_argument("--acg-min", type=float)
    p.add_argument("--signature")
    p.add_argument("--severity", type=int)
    p.add_argument("--ioc-file", help="JSON list of alert ids to rank")
    p.add_argument("--threshold", type=float)
    p.add_argument("--lookback", type=float)
    p.add_argument("--limit", type=int, default=100)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--spec", help="scenario spec JSON")
    p.add_argument("--preset", choices=["desk", "transfer"], default="desk")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default=None, help="default: workspace config (127.0.0.1)")
    p.add_argument("--port", type=int, default=None, help="default: workspace config (8472)")

    return parser


def _load_label_file(path: str) -> list[LabeledPair]:
    labels = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                labels.append(LabeledPair.from_dict(json.loads(line)))
    return labels


def _cmd_ingest(ws: Workspace, args) -> None:
    if args.mode:
        ws.config.mode = args.mode
    if args.mapping:
        ws.config.mapping_file = str(Path(args.mapping).resolve())
    if args.vocab:
        ws.config.vocab_file = str(Path(args.vocab).resolve())
    if args.asn_table:
        ws.config.asn_table_file = str(Path(args.asn_table).resolve())
    ws.save_config()
    meta = ws.ingest_file(args.eve)
    if args.json:
        _print_json(meta)
    else:
        stats = meta["stats"]
        print(
            f"corpus {meta['corpus_id']} ({meta['mode']} keys): {stats['alerts']} alerts, "
            f"{meta['episodes']} episodes, skipped {stats['skipped_non_alert']} non-alert / "
            f"{stats['skipped_malformed']} malformed"
        )


def _cmd_episodes(ws: Workspace, args) -> None:
    payload = ws.episodes_payload(args.key, args.stage, args.t_from, args.t_to, args.page, args.page_size)
    if args.json:
        _print_json(payload)
        return
    print(f"{payload['total']} episodes (page {payload['page']})")
    for ep in payload["episodes"]:
        print(f"  {ep['episode_id']:<40} {_episode_summary(ep)}")


def _cmd_iocs(ws: Workspace, args) -> None:
    payload = ws.iocs_payload(args.signature, args.severity, args.limit)
    if args.json:
        _print_json(payload)
        return
    for row in payload["iocs"]:
        print(f"  {row['alert_id']}  {_fmt_time(row['timestamp'])}  sev={row['severity']} "
              f"[{row['stage']}] {row['signature']}")


def _cmd_label(ws: Workspace, args) -> None:
    if args.from_file:
        labels = _load_label_file(args.from_file)
        ws.append_labels(labels)
        print(f"appended {len(labels)} labels")
        return
    if not args.interactive:
        raise ValidationError("label needs --interactive or --from-file")
    store = ws.store()
    from .hac import resolve_ioc

    ioc = resolve_ioc(store, alert_id=args.ioc)
    critical = store.get(ioc.critical_episode_id)
    priors = store.prior_episodes(critical.peak_time, args.lookback)
    priors = sorted(priors, key=lambda e: -e.peak_time)[: args.limit]
    print(f"critical episode {critical.episode_id} [{critical.stage}] at {_fmt_time(critical.peak_time)}")
    print(HEAT_PROMPT)
    labels = []
    for i, ep in enumerate(priors, 1):
        print(f"[{i}/{len(priors)}] {ep.episode_id}")
        print("   " + _episode_summary(ep.to_dict()))
        while True:
            answer = input("   heat 0/1/2/3, (s)kip, (q)uit> ").strip().lower()
            if answer in ("0", "1", "2", "3", "s", "q"):
                break
            print("   expected one of: 0 1 2 3 s q")
        if answer == "q":
            break
        if answer == "s":
            continue
        labels.append(LabeledPair(critical.episode_id, ep.episode_id, int(answer), args.annotator))
    if labels:
        ws.append_labels(labels)
    print(f"recorded {len(labels)} labels ({len(ws.effective_labels())} total)")


def _cmd_train(ws: Workspace, args) -> None:
    hp = None
    if args.family or args.seed is not None:
        hp = Hyperparams(
            family=args.family or "gbrt",
            seed=args.seed if args.seed is not None else 7,
        )
    labels = _load_label_file(args.labels) if args.labels else None
    version, model = ws.train_model(labels, hp)
    if args.out:
        model.save(args.out)
    payload = {"version": version, "cv_mse": model.cv_mse, "labels": len(model.labels)}
    _print_json(payload) if args.json else print(
        f"trained {version}: cv_mse={model.cv_mse:.4f} on {len(model.labels)} labels"
    )


def _cmd_finetune(ws: Workspace, args) -> None:
    labels = _load_label_file(args.labels)
    version, model = ws.finetune_model(labels, args.base)
    payload = {"version": version, "cv_mse": model.cv_mse, "labels": len(model.labels)}
    _print_json(payload) if args.json else print(
        f"fine-tuned {version}: cv_mse={model.cv_mse:.4f} on {len(model.labels)} labels"
    )


def _cmd_hac(ws: Workspace, args) -> None:
    payload = ws.hac_payload_for(args.ioc, args.method, args.model, args.threshold, args.lookback)
    if args.json:
        _print_json(payload)
        return
    print(
        f"campaign for {payload['ioc']['critical_alert_id']} "
        f"(episode {payload['ioc']['critical_episode_id']}, method {payload['method']}, "
        f"threshold {payload['threshold']}): {len(payload['episodes'])} episodes"
    )
    for ep in payload["episodes"]:
        print(f"  heat={ep['heat']:.2f}  {_fmt_time(ep['peak_time'])}  {ep['stage']:<22} "
              f"alerts={ep['alert_count']} {ep['episode_id']}")


def _cmd_gain(ws: Workspace, args) -> None:
    payload = ws.gain_payload_for(args.ioc, args.method, args.model, args.threshold, args.lookback)
    if args.json:
        _print_json(payload)
        return
    gain = "n/a" if payload["gain"] is None else f"{payload['gain']:.4f}"
    coh = "n/a" if payload["coh"] is None else f"{payload['coh']:.4f}"
    print(
        f"gain={gain} (acg={payload['acg']:.4f} nrg={payload['nrg']:.4f} coh={coh}) "
        f"hac={payload['hac_size']}/{payload['window_size']} episodes"
        + (" [partial: no training labels]" if payload["partial"] else "")
    )


def _cmd_rank(ws: Workspace, args) -> None:
    ioc_ids = None
    if args.ioc_file:
        ioc_ids = json.loads(Path(args.ioc_file).read_text(encoding="utf-8"))
    payload = ws.rank_payload(
        args.model, args.acg_min, args.signature, args.severity,
        ioc_ids, args.threshold, args.lookback, args.limit,
    )
    if args.json:
        _print_json(payload)
        return
    if args.csv:
        sys.stdout.write(ws.rank_csv(payload))
        return
    print(f"{len(payload['ranked'])} of {payload['candidates']} IoCs above acg_min={payload['acg_min']}")
    for i, row in enumerate(payload["ranked"], 1):
        print(
            f"{i:>3}. gain={row['gain']:.4f} acg={row['acg']:.3f} nrg={row['nrg']:.3f} "
            f"coh={row['coh']:.3f} hac={row['hac_size']:<4} {row['ioc']['critical_alert_id']} {row['signature']}"
        )


def _cmd_synth(ws: Workspace, args) -> None:
    if args.spec:
        spec = ScenarioSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
    elif args.preset == "transfer":
        spec = ScenarioSpec.transfer_target(seed=args.seed)
    else:
        spec = ScenarioSpec.desk_scale(seed=args.seed)
    scenario = generate(spec)
    eve_path, truth_path = scenario.write(args.out)
    asn_path = Path(args.out) / "asn.csv"
    asn_path.write_text(
        "cidr,asn\n" + "\n".join(f"{c},{a}" for c, a in asn_entries(spec)) + "\n", encoding="utf-8"
    )
    payload = {
        "eve": str(eve_path),
        "truth": str(truth_path),
        "asn_table": str(asn_path),
        "alerts": len(scenario.eve_lines),
        "campaigns": scenario.campaign_ids(),
    }
    _print_json(payload) if args.json else print(
        f"wrote {payload['alerts']} alerts ({', '.join(payload['campaigns'])}) to {args.out}"
    )


def _cmd_serve(ws: Workspace, args) -> None:
    import uvicorn

    from .service import create_app

    host = args.host if args.host is not None else ws.config.host
    port = args.port if args.port is not None else ws.config.port
    uvicorn.run(create_app(ws), host=host, port=port)


_COMMANDS = {
    "ingest": _cmd_ingest,
    "episodes": _cmd_episodes,
    "iocs": _cmd_iocs,
    "label": _cmd_label,
    "train": _cmd_train,
    "finetune": _cmd_finetune,
    "hac": _cmd_hac,
    "gain": _cmd_gain,
    "rank": _cmd_rank,
    "synth": _cmd_synth,
    "serve": _cmd_serve,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        # synth is pure generation; don't create a workspace directory for it
        ws = None if args.command == "synth" else Workspace(args.workspace)
        _COMMANDS[args.command](ws, args)
    except TriageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
