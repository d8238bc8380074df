"""Batch CLI over the pipeline; replay transport by default so CI never
touches the network.

Exit codes: 0 success, 2 input parse error, 3 transport/fixture error,
4 validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .codegen import AnimationBundle, emit_bundle, emit_preview_html, write_bundle
from .grouping import GroupingSpec, InvalidSpec, apply_grouping
from .llm import (
    RepairExhausted,
    RepairPolicy,
    TransportConfig,
    TransportError,
    build_decomposition_request,
    build_motion_request,
    parse_decomposition_response,
    parse_motion_response,
    run_with_repair,
    save_fixture,
    transport_complete,
)
from .motion import DslParseError, MotionValidationError, parse_motion_dsl
from .svgdoc import SvgParseError, flatten_and_assign_ids, parse_svg, serialize_svg

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TRANSPORT = 3
EXIT_VALIDATION = 4


def _err(message: str):
    print(f"decomate: {message}", file=sys.stderr)


def _default_fixtures() -> str:
    base = os.environ.get("DECOMATE_DATA_DIR")
    return str(Path(base) / "fixtures") if base else "./fixtures"


def _add_transport_flags(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--transport", choices=["replay", "live"], default="replay",
        help="replay serves recorded fixtures; live needs --endpoint and the API key env var",
    )
    parser.add_argument("--fixtures", default=_default_fixtures())
    parser.add_argument("--endpoint", default="")
    parser.add_argument("--api-key-env", default="DECOMATE_API_KEY")
    parser.add_argument("--model", default="")
    parser.add_argument("--max-attempts", type=int, default=3)


def _transport_from(args) -> TransportConfig:
    if args.transport == "live":
        return TransportConfig(
            mode="live",
            endpoint_url=args.endpoint,
            api_key_env_name=args.api_key_env,
            model=args.model,
        )
    return TransportConfig(mode="replay", fixture_dir=args.fixtures)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SystemExit((_err(f"cannot read {path}: {exc}"), EXIT_INPUT)[1])


def _cmd_decompose(args) -> int:
    try:
        doc = flatten_and_assign_ids(parse_svg(_read_text(args.svg)))
    except SvgParseError as exc:
        _err(str(exc))
        return EXIT_INPUT
    cfg = _transport_from(args)
    policy = RepairPolicy(max_attempts=args.max_attempts)
    try:
        outcome = run_with_repair(
            cfg,
            policy,
            lambda: build_decomposition_request(doc, args.object),
            lambda text: parse_decomposition_response(text, doc),
        )
    except TransportError as exc:
        _err(str(exc))
        return EXIT_TRANSPORT
    except RepairExhausted as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    grouping: GroupingSpec = outcome.value
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "grouped.svg").write_text(
        serialize_svg(apply_grouping(doc, grouping)), encoding="utf-8"
    )
    (outdir / "grouping.json").write_text(grouping.to_json(), encoding="utf-8")
    print(outdir / "grouping.json")
    return EXIT_OK


def _load_grouping(path: str) -> GroupingSpec:
    data = json.loads(_read_text(path))
    return GroupingSpec.from_wire(data)


def _cmd_animate(args) -> int:
    try:
        doc = parse_svg(_read_text(args.svg))
        grouping = _load_grouping(args.grouping)
    except (SvgParseError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT

    if args.dsl:
        dsl_text = _read_text(args.dsl)
        try:
            motion = parse_motion_dsl(dsl_text, grouping)
        except DslParseError as exc:
            _err(str(exc))
            return EXIT_INPUT
        except MotionValidationError as exc:
            _err(str(exc))
            return EXIT_VALIDATION
    else:
        cfg = _transport_from(args)
        policy = RepairPolicy(max_attempts=args.max_attempts)
        try:
            outcome = run_with_repair(
                cfg,
                policy,
                lambda: build_motion_request(grouping, {}, global_prompt=args.prompt),
                lambda text: parse_motion_response(text, grouping),
            )
        except TransportError as exc:
            _err(str(exc))
            return EXIT_TRANSPORT
        except RepairExhausted as exc:
            _err(str(exc))
            return EXIT_VALIDATION
        motion = outcome.value

    try:
        bundle = emit_bundle(doc, motion, grouping)
    except (InvalidSpec, ValueError) as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    write_bundle(bundle, args.output)
    print(Path(args.output) / "index.html")
    return EXIT_OK


def _cmd_preview(args) -> int:
    outdir = Path(args.outdir)
    try:
        bundle = AnimationBundle(
            html=(outdir / "index.html").read_text(encoding="utf-8"),
            css=(outdir / "style.css").read_text(encoding="utf-8"),
            js=(outdir / "anim.js").read_text(encoding="utf-8"),
            manifest=json.loads((outdir / "manifest.json").read_text(encoding="utf-8")),
        )
    except OSError as exc:
        _err(f"not a bundle directory: {exc}")
        return EXIT_INPUT
    path = outdir / "preview.html"
    path.write_text(emit_preview_html(bundle), encoding="utf-8")
    print(path)
    return EXIT_OK


def _cmd_record_fixture(args) -> int:
    try:
        doc = flatten_and_assign_ids(parse_svg(_read_text(args.svg)))
    except SvgParseError as exc:
        _err(str(exc))
        return EXIT_INPUT
    if args.grouping:
        grouping = _load_grouping(args.grouping)
        request = build_motion_request(grouping, {}, global_prompt=args.prompt)
    else:
        request = build_decomposition_request(doc, args.object)
    cfg = TransportConfig(
        mode="live",
        endpoint_url=args.endpoint,
        api_key_env_name=args.api_key_env,
        model=args.model,
    )
    try:
        response = transport_complete(cfg, request)
    except TransportError as exc:
        _err(str(exc))
        return EXIT_TRANSPORT
    path = save_fixture(args.fixtures, request, response.text)
    print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="decomate",
        description="Restructure SVGs into animation-ready groups and compile motion bundles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="semantically group an SVG")
    p.add_argument("svg")
    p.add_argument("--object", required=True, help="high-level object name, e.g. dog")
    p.add_argument("-o", "--output", required=True)
    _add_transport_flags(p)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("animate", help="compile motion for a grouped SVG")
    p.add_argument("svg", help="grouped.svg from decompose")
    p.add_argument("--grouping", required=True, help="grouping.json from decompose")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--dsl", help="motion DSL file (no LLM involved)")
    source.add_argument("--prompt", help="natural-language motion prompt")
    p.add_argument("-o", "--output", required=True)
    _add_transport_flags(p)
    p.set_defaults(func=_cmd_animate)

    p = sub.add_parser("preview", help="write a self-contained preview for a bundle")
    p.add_argument("outdir")
    p.set_defaults(func=_cmd_preview)

    p = sub.add_parser("record-fixture", help="run one live request and store the fixture")
    p.add_argument("svg")
    p.add_argument("--object", default="")
    p.add_argument("--grouping", default="", help="record a motion request instead")
    p.add_argument("--prompt", default="")
    p.add_argument("--fixtures", default=_default_fixtures())
    p.add_argument("--endpoint", required=True)
    p.add_argument("--api-key-env", default="DECOMATE_API_KEY")
    p.add_argument("--model", default="")
    p.set_defaults(func=_cmd_record_fixture)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
