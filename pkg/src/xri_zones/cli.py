"""xri-zones command line.

Exit codes: 0 ok, 1 validation error, 2 trace mismatch (run --expect / diff).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import LayoutValidationError, Trace, diff_traces, run_scenario
from .model import LayoutFormatError, layout_from_json, validate_layout
from .repl import interactive_repl
from .script import ScriptError, load_script
from .taxonomy import MiraCoordinates, classify_design, exemplar_by_index


def _load_layout(path: str):
    try:
        layout = layout_from_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, LayoutFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)
    violations = validate_layout(layout)
    if violations:
        for v in violations:
            print(f"layout violation: {v.code} {v.subject}: {v.detail}", file=sys.stderr)
        raise SystemExit(1)
    return layout


def _load_script(path: str, layout):
    try:
        return load_script(Path(path).read_bytes(), layout)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)
    except ScriptError as exc:
        for v in exc.violations:
            print(f"script violation: {v.code} line {v.line}: {v.message}", file=sys.stderr)
        raise SystemExit(1)


def _cmd_run(args: argparse.Namespace) -> int:
    layout = _load_layout(args.layout)
    script = _load_script(args.script, layout)
    try:
        trace = run_scenario(script, layout)
    except LayoutValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    data = trace.to_jsonl()
    if args.trace:
        Path(args.trace).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    if args.expect:
        expected = Trace.from_jsonl(Path(args.expect).read_bytes())
        diff = diff_traces(trace, expected)
        if Path(args.expect).read_bytes() != data:
            where = f" (first structural difference: seq {diff.seq}, {diff.path})" if diff else ""
            print(f"trace mismatch against {args.expect}{where}", file=sys.stderr)
            return 2
        print(f"trace matches {args.expect}", file=sys.stderr)
    return 0


def _cmd_repl(args: argparse.Namespace) -> int:
    layout = _load_layout(args.layout)
    bus = None
    if args.broker:
        from .bus.mqtt_client import MqttBusClient

        bus = MqttBusClient()
        bus.connect(args.broker)
    try:
        return interactive_repl(layout, realtime=args.realtime, bus=bus, trace_path=args.trace)
    finally:
        if bus is not None:
            bus.close()


def _cmd_serve(args: argparse.Namespace) -> int:
    from .serve import ZoneRuntimeService

    layout = _load_layout(args.layout)
    service = ZoneRuntimeService(
        layout,
        broker_url=args.broker,
        virtual_clock=args.virtual_clock,
        builtin_broker=args.builtin_broker,
        ws_port=args.ws_port,
    )
    try:
        service.start()
        where = f"broker {args.broker}" + (f", websocket :{service.broker.ws_port}" if service.broker else "")
        print(f"serving space {layout.space_id!r} on {where}; ctrl-c to stop", file=sys.stderr)
        service.run_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    try:
        c = MiraCoordinates(args.virtuality, args.agency, args.pr)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    index = classify_design(c)
    exemplar = exemplar_by_index(index)
    if args.format == "json":
        print(json.dumps({"index": index, "label": exemplar.label}, sort_keys=True))
    else:
        print(f"{index} {exemplar.label}")
    return 0


def _cmd_diff(args: argparse.Namespace) -> int:
    a = Trace.from_jsonl(Path(args.a).read_bytes())
    b = Trace.from_jsonl(Path(args.b).read_bytes())
    diff = diff_traces(a, b)
    if diff is None:
        print("traces are equal")
        return 0
    print(f"traces diverge at seq {diff.seq}, path {diff.path}")
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xri-zones", description="Spatial zone agent runtime")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scripted scenario and emit its trace")
    run.add_argument("--layout", required=True)
    run.add_argument("--script", required=True)
    run.add_argument("--trace", help="write the trace here instead of stdout")
    run.add_argument("--expect", help="compare against a golden trace; exit 2 on mismatch")
    run.set_defaults(func=_cmd_run)

    repl = sub.add_parser("repl", help="interactive event injection")
    repl.add_argument("--layout", required=True)
    repl.add_argument("--realtime", action="store_true", help="map wall-clock time to virtual ticks")
    repl.add_argument("--broker", help="also publish to this MQTT broker")
    repl.add_argument("--trace", help="write the session trace on exit")
    repl.set_defaults(func=_cmd_repl)

    serve = sub.add_parser("serve", help="headless runtime driven over a broker")
    serve.add_argument("--layout", required=True)
    serve.add_argument("--broker", required=True, help="MQTT endpoint, e.g. mqtt://127.0.0.1:1883")
    serve.add_argument("--builtin-broker", action="store_true", help="start the bundled broker at that endpoint")
    serve.add_argument("--ws-port", type=int, help="MQTT-over-WebSocket port for the builtin broker")
    serve.add_argument(
        "--virtual-clock",
        action="store_true",
        help="advance time only on tick commands instead of wall time",
    )
    serve.set_defaults(func=_cmd_serve)

    classify = sub.add_parser("classify", help="place a design in the three-axis space")
    classify.add_argument("--virtuality", type=float, required=True)
    classify.add_argument("--agency", type=float, required=True)
    classify.add_argument("--pr", type=float, required=True)
    classify.add_argument("--format", choices=("text", "json"), default="text")
    classify.set_defaults(func=_cmd_classify)

    diff = sub.add_parser("diff", help="first divergence between two traces")
    diff.add_argument("a")
    diff.add_argument("b")
    diff.set_defaults(func=_cmd_diff)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
