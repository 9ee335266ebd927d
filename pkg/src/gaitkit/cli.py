"""Command-line entry point: ``gaitkit <command> [options]``.

Exit codes: 0 ok, 2 config, 3 parse, 4 insufficient data, 5 sync failure,
6 internal. Failures print one JSON object on standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import EXIT_INTERNAL, EXIT_OK, ConfigError, GaitkitError, ParseError
from .ingest import normalize_axes, serialize_csv, serialize_json
from .pipeline import (
    RunConfig,
    analyze_sequence,
    classify_sequence,
    clean_json,
    dump_report,
    load_input,
    validate_sequences,
)
from .stream import ANGLE_HEADER, StreamSession, serve
from .synth import SynthParams, condition_suite, generate, generate_pair

logger = logging.getLogger("gaitkit")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (stdout when omitted)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--axes", help="input axis convention, e.g. 'x,-y,z'")
    common.add_argument("--smooth", type=int, dest="smooth_window", metavar="FRAMES")
    common.add_argument("--event-smooth", type=int, dest="event_smooth", metavar="FRAMES")
    common.add_argument("--condition", help="condition label for report grouping")

    parser = argparse.ArgumentParser(prog="gaitkit", description="Ankle kinematics and gait pattern analysis.")
    parser.add_argument("--version", action="version", version=f"gaitkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[common], help="re-encode a keypoint file (JSON <-> CSV)")
    p.add_argument("--input", metavar="PATH")
    p.add_argument("--normalize", action="store_true", help="apply the axis convention before writing")

    p = sub.add_parser("analyze", parents=[common], help="angles, events, FPA and class for one recording")
    p.add_argument("--input", metavar="PATH")

    p = sub.add_parser("validate", parents=[common], help="compare an estimate against a reference recording")
    p.add_argument("--input", metavar="PATH")
    p.add_argument("--reference", metavar="PATH")
    p.add_argument("--reference-axes", dest="reference_axes")
    p.add_argument("--bin-width", type=float, dest="bin_width", metavar="DEG")

    p = sub.add_parser("classify", parents=[common], help="gait pattern label for one recording")
    p.add_argument("--input", metavar="PATH")

    p = sub.add_parser("synth", parents=[common], help="generate synthetic sessions with ground truth")
    p.add_argument("--params", metavar="PATH", help="JSON synth parameters")
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=float, dest="noise_sigma", metavar="METRES")
    p.add_argument("--batch", type=int, metavar="K", help="four-class suite with K sessions per class")
    p.add_argument("--pair", action="store_true", help="also write a reference recording")
    p.add_argument("--offset", type=float, default=0.0, help="reference clock offset (s)")
    p.add_argument("--rate", type=float, default=1.0, help="reference clock rate")

    p = sub.add_parser("stream", parents=[common], help="analyse frames arriving over UDP/TCP/stdin")
    p.add_argument("--listen", metavar="HOST:PORT", default="127.0.0.1:9750",
                   help="[udp://|tcp://]HOST:PORT, or '-' for stdin")
    p.add_argument("--idle-timeout", type=float, dest="idle_timeout", metavar="SECONDS")
    p.add_argument("--sessions", type=int, default=0, help="stop after N sessions (0 = run forever)")
    return parser


def _configure_logging(config: RunConfig) -> None:
    level = os.environ.get("GAITKIT_LOG") or config.log_level
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _effective_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {
        "input": getattr(args, "input", None),
        "reference": getattr(args, "reference", None),
        "out": args.out,
        "axes": args.axes,
        "reference_axes": getattr(args, "reference_axes", None),
        "smooth_window": args.smooth_window,
        "bin_width": getattr(args, "bin_width", None),
        "condition": args.condition,
        "idle_timeout": getattr(args, "idle_timeout", None),
        "events.smooth_window": args.event_smooth,
    }
    return config.updated(**overrides)


def _write_outputs(out: str, files: dict[str, str]) -> None:
    """Write every file via a temporary name so none is left half-written."""
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        path = root / name
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8", newline="")
        os.replace(tmp, path)


def _emit(config: RunConfig, fmt: str, report: dict, artifacts: dict, csv_name: str) -> None:
    if config.out:
        _write_outputs(config.out, {"report.json": dump_report(report), **artifacts})
    elif fmt == "csv":
        sys.stdout.write(artifacts[csv_name])
    else:
        sys.stdout.write(dump_report(report))


def _require(value, flag: str):
    if not value:
        raise ConfigError(f"{flag} is required")
    return value


def cmd_convert(args, config: RunConfig) -> None:
    seq = load_input(_require(config.input, "--input"), config, config.axes)
    if args.normalize:
        seq = normalize_axes(seq)
    data = serialize_csv(seq) if args.format == "csv" else serialize_json(seq)
    if config.out:
        out = Path(config.out)
        if out.suffix:
            out.parent.mkdir(parents=True, exist_ok=True)
            target = out
        else:
            out.mkdir(parents=True, exist_ok=True)
            target = out / (Path(config.input).stem + (".csv" if args.format == "csv" else ".jsonl"))
        tmp = target.with_name(target.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, target)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def cmd_analyze(args, config: RunConfig) -> None:
    seq = load_input(_require(config.input, "--input"), config, config.axes)
    report, artifacts = analyze_sequence(seq, config)
    _emit(config, args.format, report, artifacts, "angles.csv")


def cmd_validate(args, config: RunConfig) -> None:
    est = load_input(_require(config.input, "--input"), config, config.axes)
    ref = load_input(_require(config.reference, "--reference"), config)
    report, artifacts = validate_sequences(est, ref, config)
    first = next((n for n in artifacts if n.startswith("histogram_")), "fpa_box.csv")
    _emit(config, args.format, report, artifacts, first)


def cmd_classify(args, config: RunConfig) -> None:
    seq = load_input(_require(config.input, "--input"), config, config.axes)
    result = classify_sequence(seq, config)
    if args.format == "csv":
        labels = sorted(result["scores"])
        text = "label," + ",".join(f"score_{k}" for k in labels) + "\n"
        text += result["label"] + "," + ",".join(repr(result["scores"][k]) for k in labels) + "\n"
    else:
        text = json.dumps({"config": config.to_dict(), **clean_json(result)}, indent=2) + "\n"
    if config.out:
        _write_outputs(config.out, {"classification." + args.format: text})
    else:
        sys.stdout.write(text)


def _synth_params(args) -> SynthParams:
    if args.params:
        try:
            with open(args.params, encoding="utf-8") as fh:
                params = SynthParams.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read synth parameters {args.params}: {exc}") from exc
    elif args.condition:
        params = SynthParams.for_condition(args.condition)
    else:
        params = SynthParams()
    changes = {k: v for k, v in (("seed", args.seed), ("noise_sigma", args.noise_sigma)) if v is not None}
    return replace(params, **changes) if changes else params


def _session_files(name: str, params: SynthParams, args) -> dict[str, bytes]:
    encode = serialize_csv if args.format == "csv" else serialize_json
    ext = ".csv" if args.format == "csv" else ".jsonl"
    files = {}
    if args.pair:
        est, ref, truth = generate_pair(params, offset=args.offset, rate=args.rate)
        files[f"{name}_reference{ext}"] = encode(ref)
    else:
        est, truth = generate(params)
    files[name + ext] = encode(est)
    sidecar = {"params": clean_json(params.to_dict()), "truth": clean_json(truth.to_dict())}
    files[f"{name}.truth.json"] = (json.dumps(sidecar, indent=2) + "\n").encode("utf-8")
    return files


def cmd_synth(args, config: RunConfig) -> None:
    out = Path(_require(config.out, "--out"))
    files: dict[str, bytes] = {}
    if args.batch:
        base = _synth_params(args)
        seed = base.seed if base.seed is not None else 0
        extra = {"noise_sigma": base.noise_sigma} if base.noise_sigma else {}
        index = []
        for k, params in enumerate(condition_suite(args.batch, seed=seed, **extra)):
            name = f"session_{k:03d}_{params.condition}"
            files.update(_session_files(name, params, args))
            index.append({"session": name, "label": params.condition})
        files["manifest.json"] = (json.dumps(index, indent=2) + "\n").encode("utf-8")
    else:
        files.update(_session_files("session", _synth_params(args), args))
    out.mkdir(parents=True, exist_ok=True)
    for name, data in files.items():
        tmp = out / (name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, out / name)


def cmd_stream(args, config: RunConfig) -> None:
    rows_out = sys.stdout
    rows_out.write(ANGLE_HEADER + "\n")
    rows_out.flush()
    count = [0]

    def on_row(row: str) -> None:
        rows_out.write(row + "\n")
        rows_out.flush()

    def on_close(session: StreamSession, result) -> None:
        if result is None:
            notice = {"notice": "empty session", "received": session.received, "dropped": session.dropped}
            sys.stderr.write(json.dumps(notice) + "\n")
            sys.stderr.flush()
            return
        report, artifacts = result
        count[0] += 1
        if config.out:
            _write_outputs(str(Path(config.out) / f"session_{count[0]:03d}"),
                           {"report.json": dump_report(report), **artifacts})
        else:
            sys.stderr.write(dump_report(report))

    serve(config, args.listen, on_row, on_close, max_sessions=args.sessions)


COMMANDS = {
    "convert": cmd_convert,
    "analyze": cmd_analyze,
    "validate": cmd_validate,
    "classify": cmd_classify,
    "synth": cmd_synth,
    "stream": cmd_stream,
}


def _error_json(exc: BaseException, code: int) -> str:
    body = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ParseError) and exc.line is not None:
        body["line"] = exc.line
    return json.dumps(body)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _effective_config(args)
        _configure_logging(config)
        COMMANDS[args.command](args, config)
    except GaitkitError as exc:
        sys.stderr.write(_error_json(exc, exc.exit_code) + "\n")
        return exc.exit_code
    except KeyboardInterrupt:
        return EXIT_OK
    except BrokenPipeError:
        # reader went away (e.g. `| head`); silence the flush at interpreter exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal exit code
        logger.debug("internal error", exc_info=True)
        sys.stderr.write(_error_json(exc, EXIT_INTERNAL) + "\n")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
