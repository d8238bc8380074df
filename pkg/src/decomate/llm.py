"""Provider-agnostic LLM access with replayable transports and a repair loop.

The model only ever produces structured IR (grouping or motion JSON); all
code generation stays deterministic. Replay fixtures are keyed by a digest
of the request's canonical text parts, so any prompt change re-keys the
fixture on purpose.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .grouping import GroupingSpec, ValidationReport, validate_and_complete
from .motion import MotionSpec, track_from_wire, validate_motion
from .svgdoc import SvgDocument, serialize_svg

__all__ = [
    "ChatRequest",
    "ChatResponse",
    "FixtureMissing",
    "ImagePart",
    "ProviderError",
    "RepairExhausted",
    "RepairOutcome",
    "RepairPolicy",
    "RepairableError",
    "TextPart",
    "TransportConfig",
    "TransportError",
    "TransportTimeout",
    "build_decomposition_request",
    "build_motion_request",
    "parse_decomposition_response",
    "parse_motion_response",
    "request_digest",
    "run_with_repair",
    "save_fixture",
    "transport_complete",
]

DECOMPOSE_TEMPERATURE = 0.2
MOTION_TEMPERATURE = 0.5
DEFAULT_MAX_OUTPUT_TOKENS = 2048


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    data: bytes
    media_type: str = "image/png"


@dataclass(frozen=True)
class ChatRequest:
    system_text: str
    user_parts: tuple[TextPart | ImagePart, ...]
    temperature: float = 0.2
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    def __post_init__(self):
        if not self.user_parts:
            raise ValueError("request needs at least one user part")


@dataclass(frozen=True)
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: Usage = Usage()
    provider_id: str = ""


@dataclass
class TransportConfig:
    mode: str  # live | replay | scripted
    endpoint_url: str = ""
    api_key_env_name: str = ""
    model: str = ""
    fixture_dir: str | Path | None = None
    script: list[str] = field(default_factory=list)
    timeout_ms: int = 30000
    max_retries: int = 2

    def __post_init__(self):
        if self.mode == "live":
            if not self.endpoint_url or not self.api_key_env_name:
                raise ValueError("live mode needs endpoint_url and api_key_env_name")
        elif self.mode == "replay":
            if not self.fixture_dir:
                raise ValueError("replay mode needs fixture_dir")
        elif self.mode != "scripted":
            raise ValueError(f"unknown transport mode {self.mode!r}")


class TransportError(RuntimeError):
    pass


class TransportTimeout(TransportError):
    pass


class FixtureMissing(TransportError):
    def __init__(self, digest: str):
        super().__init__(f"no recorded fixture for request digest {digest}")
        self.digest = digest


class ProviderError(TransportError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider error {status}: {body[:200]}")
        self.status = status
        self.body = body


def request_digest(req: ChatRequest) -> str:
    """Stable key over canonicalized text parts; image parts digest by bytes."""
    canon: list = [{"system": req.system_text}]
    for part in req.user_parts:
        if isinstance(part, TextPart):
            canon.append({"text": part.text})
        else:
            canon.append(
                {
                    "image_sha256": hashlib.sha256(part.data).hexdigest(),
                    "media_type": part.media_type,
                }
            )
    blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def save_fixture(fixture_dir: str | Path, req: ChatRequest, text: str) -> Path:
    path = Path(fixture_dir) / f"{request_digest(req)}.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _extract_response_text(data) -> str:
    if isinstance(data, dict):
        content = data.get("content")
        if isinstance(content, list) and content and isinstance(content[0], dict):
            return str(content[0].get("text", ""))
        choices = data.get("choices")
        if isinstance(choices, list) and choices and isinstance(choices[0], dict):
            message = choices[0].get("message", {})
            if isinstance(message, dict):
                return str(message.get("content", ""))
        if isinstance(data.get("text"), str):
            return data["text"]
    return ""


def _extract_usage(data) -> Usage:
    usage = data.get("usage", {}) if isinstance(data, dict) else {}
    if not isinstance(usage, dict):
        return Usage()
    return Usage(
        input_tokens=int(usage.get("input_tokens", usage.get("prompt_tokens", 0)) or 0),
        output_tokens=int(usage.get("output_tokens", usage.get("completion_tokens", 0)) or 0),
    )


def _live_payload(cfg: TransportConfig, req: ChatRequest) -> dict:
    content = []
    for part in req.user_parts:
        if isinstance(part, TextPart):
            content.append({"type": "text", "text": part.text})
        else:
            content.append(
                {
                    "type": "image",
                    "source": {
                        "type": "base64",
                        "media_type": part.media_type,
                        "data": base64.b64encode(part.data).decode("ascii"),
                    },
                }
            )
    payload = {
        "system": req.system_text,
        "messages": [{"role": "user", "content": content}],
        "max_tokens": req.max_output_tokens,
        "temperature": req.temperature,
    }
    if cfg.model:
        payload["model"] = cfg.model
    return payload


def _complete_live(cfg: TransportConfig, req: ChatRequest) -> ChatResponse:
    import httpx

    key = os.environ.get(cfg.api_key_env_name, "")
    if not key:
        raise ProviderError(0, f"environment variable {cfg.api_key_env_name} is not set")
    headers = {"content-type": "application/json", "x-api-key": key}
    payload = _live_payload(cfg, req)
    last_status, last_body = 0, ""
    for attempt in range(cfg.max_retries + 1):
        try:
            response = httpx.post(
                cfg.endpoint_url,
                json=payload,
                headers=headers,
                timeout=cfg.timeout_ms / 1000.0,
            )
        except httpx.TimeoutException as exc:
            if attempt == cfg.max_retries:
                raise TransportTimeout(str(exc)) from exc
            time.sleep(0.2 * (attempt + 1))
            continue
        if response.status_code >= 500 and attempt < cfg.max_retries:
            last_status, last_body = response.status_code, response.text
            time.sleep(0.2 * (attempt + 1))
            continue
        if response.status_code != 200:
            raise ProviderError(response.status_code, response.text)
        data = response.json()
        return ChatResponse(
            text=_extract_response_text(data),
            usage=_extract_usage(data),
            provider_id=str(data.get("id", "") if isinstance(data, dict) else ""),
        )
    raise ProviderError(last_status, last_body)


def transport_complete(cfg: TransportConfig, req: ChatRequest) -> ChatResponse:
    """One completion via the configured transport."""
    if cfg.mode == "replay":
        digest = request_digest(req)
        path = Path(cfg.fixture_dir) / f"{digest}.txt"
        if not path.is_file():
            raise FixtureMissing(digest)
        return ChatResponse(text=path.read_text(encoding="utf-8"), provider_id="replay")
    if cfg.mode == "scripted":
        if not cfg.script:
            raise ProviderError(0, "scripted response queue exhausted")
        return ChatResponse(text=cfg.script.pop(0), provider_id="scripted")
    return _complete_live(cfg, req)


@dataclass(frozen=True)
class RepairableError:
    code: str
    subject: str
    message: str

    def to_wire(self) -> dict:
        return {"code": self.code, "subject": self.subject, "message": self.message}


def _report_errors(report: ValidationReport) -> list[RepairableError]:
    return [RepairableError(i.code, i.subject, i.message) for i in report.errors()]


def extract_json(text: str):
    """First JSON object in `text`, fenced or bare; None if there is none."""
    candidates = []
    start = 0
    while True:
        fence = text.find("```", start)
        if fence == -1:
            break
        body_start = text.find("\n", fence)
        end = text.find("```", fence + 3)
        if body_start == -1 or end == -1 or body_start > end:
            break
        candidates.append(text[body_start + 1 : end])
        start = end + 3
    candidates.append(text)
    for candidate in candidates:
        obj = _scan_object(candidate)
        if obj is not None:
            return obj
    return None


def _scan_object(text: str):
    depth = 0
    begin = -1
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                begin = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0:
                    try:
                        return json.loads(text[begin : i + 1])
                    except ValueError:
                        begin = -1
    return None


_GROUPING_SCHEMA = """\
{
  "object": "<the object name>",
  "groups": [
    {
      "name": "<lowercase-slug>",
      "members": ["el-0", "el-1"],
      "suggestions": ["<one short animation idea>"]
    }
  ]
}"""

_MOTION_SCHEMA = """\
{
  "tracks": [
    {
      "group": "<group name>",
      "property": "translateX | translateY | rotate | scale | scaleX | scaleY | opacity",
      "from": "<number with unit, e.g. -15deg, 4px, 0.5>",
      "to": "<number with unit>",
      "duration_ms": 800,
      "delay_ms": 0,
      "iterations": "infinite",
      "direction": "normal | alternate",
      "easing": {"kind": "linear | ease | ease-in | ease-out | ease-in-out | cubic-bezier | elastic-out | bounce-out | steps"},
      "origin": "auto"
    }
  ],
  "global": {"loop_all": false}
}"""

_MOTION_RULES = """\
Rules:
- translateX/translateY use px, rotate uses deg, scale and opacity are unitless.
- opacity values stay within [0, 1]; duration_ms is at least 16.
- at most one track per group and property kind (translate, rotate, scale, opacity).
- transforms compose in the fixed order translate -> rotate -> scale.
- easing kinds: linear, ease, ease-in, ease-out, ease-in-out,
  cubic-bezier {"kind":"cubic-bezier","x1":..,"y1":..,"x2":..,"y2":..},
  elastic-out {"kind":"elastic-out","amplitude":1,"period":0.3},
  bounce-out, steps {"kind":"steps","count":4}.
- oscillating motion (flap, swing, bob) = from/to extremes with
  "direction": "alternate" and "iterations": "infinite"."""


def build_decomposition_request(
    doc: SvgDocument,
    object_name: str,
    image: bytes | None = None,
    current: GroupingSpec | None = None,
    feedback: str | None = None,
) -> ChatRequest:
    """Prompt for semantic decomposition (or regrouping when `feedback` is
    given); the document must be flattened with ids assigned."""
    system = (
        "You analyze SVG graphics and split them into semantically meaningful, "
        "animation-ready groups of elements. Respond with exactly one JSON object "
        "matching this schema:\n"
        f"{_GROUPING_SCHEMA}\n"
        "Rules:\n"
        "- members must be id attributes that exist in the SVG, each used at most once.\n"
        '- never use the reserved group name "rest".\n'
        "- group names are short lowercase slugs ([a-z0-9-]).\n"
        "- give 1-3 animation suggestions per group, phrased for a motion designer.\n"
        "- group by visual meaning, not by the file's existing structure."
    )
    sections = [
        f"Object name: {object_name}",
        "SVG document:\n```xml\n" + serialize_svg(doc) + "```",
    ]
    if current is not None:
        sections.append(
            "Current grouping:\n```json\n"
            + json.dumps(current.to_wire(), indent=2)
            + "\n```"
        )
    if feedback:
        sections.append(
            "The user wants the grouping revised as follows. Reply with the "
            f"complete replacement grouping JSON.\nFeedback: {feedback}"
        )
    parts: list[TextPart | ImagePart] = [TextPart("\n\n".join(sections))]
    if image is not None:
        parts.append(ImagePart(image))
    return ChatRequest(
        system_text=system,
        user_parts=tuple(parts),
        temperature=DECOMPOSE_TEMPERATURE,
    )


def parse_decomposition_response(
    text: str, doc: SvgDocument
) -> GroupingSpec | list[RepairableError]:
    """Extract, schema-check, and complete a grouping; errors come back as
    values so the repair loop can re-prompt."""
    data = extract_json(text)
    if data is None:
        return [RepairableError("NoJsonFound", "", "response contains no JSON object")]
    if not isinstance(data, dict):
        return [RepairableError("SchemaError", "", "top-level JSON value is not an object")]
    groups = data.get("groups")
    if not isinstance(groups, list) or not groups:
        return [RepairableError("SchemaError", "groups", '"groups" must be a non-empty list')]
    schema_errors = []
    for i, g in enumerate(groups):
        where = f"groups[{i}]"
        if not isinstance(g, dict):
            schema_errors.append(RepairableError("SchemaError", where, "group must be an object"))
            continue
        if not isinstance(g.get("name"), str) or not g.get("name"):
            schema_errors.append(RepairableError("SchemaError", where, "missing group name"))
        members = g.get("members")
        if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
            schema_errors.append(
                RepairableError("SchemaError", where, "members must be a list of id strings")
            )
        suggestions = g.get("suggestions", [])
        if not isinstance(suggestions, list) or not all(isinstance(s, str) for s in suggestions):
            schema_errors.append(
                RepairableError("SchemaError", where, "suggestions must be a list of strings")
            )
    if schema_errors:
        return schema_errors
    spec = GroupingSpec.from_wire(data)
    completed, report = validate_and_complete(doc, spec)
    if not report.ok:
        return _report_errors(report)
    return completed


def build_motion_request(
    grouping: GroupingSpec,
    user_prompts: dict[str, str],
    global_prompt: str | None = None,
    prior: MotionSpec | None = None,
) -> ChatRequest:
    """Prompt for motion authoring over the given grouping."""
    system = (
        "You turn natural-language motion descriptions into a JSON animation "
        "spec for grouped SVG elements. Respond with exactly one JSON object "
        "matching this schema:\n"
        f"{_MOTION_SCHEMA}\n"
        f"{_MOTION_RULES}"
    )
    lines = ["Groups and their suggested motions:"]
    for g in grouping.groups:
        suggestion = "; ".join(g.suggestions) if g.suggestions else "(no suggestions)"
        lines.append(f"- {g.name}: {suggestion}")
    if user_prompts:
        lines.append("")
        lines.append("Per-group motion requests:")
        for name in sorted(user_prompts):
            lines.append(f"- {name}: {user_prompts[name]}")
    if global_prompt:
        lines.append("")
        lines.append(f"Overall request: {global_prompt}")
    if prior is not None:
        lines.append("")
        lines.append(
            "Current animation spec (revise it according to the requests above):\n"
            "```json\n" + json.dumps(prior.to_wire(), indent=2) + "\n```"
        )
    return ChatRequest(
        system_text=system,
        user_parts=(TextPart("\n".join(lines)),),
        temperature=MOTION_TEMPERATURE,
    )


def parse_motion_response(
    text: str, grouping: GroupingSpec
) -> MotionSpec | list[RepairableError]:
    data = extract_json(text)
    if data is None:
        return [RepairableError("NoJsonFound", "", "response contains no JSON object")]
    if not isinstance(data, dict):
        return [RepairableError("SchemaError", "", "top-level JSON value is not an object")]
    raw_tracks = data.get("tracks")
    if not isinstance(raw_tracks, list):
        return [RepairableError("SchemaError", "tracks", '"tracks" must be a list')]
    tracks = []
    schema_errors = []
    for i, raw in enumerate(raw_tracks):
        where = f"tracks[{i}]"
        if not isinstance(raw, dict):
            schema_errors.append(RepairableError("SchemaError", where, "track must be an object"))
            continue
        try:
            tracks.append(track_from_wire(raw))
        except (ValueError, KeyError, TypeError, OverflowError) as exc:
            schema_errors.append(RepairableError("SchemaError", where, str(exc)))
    if schema_errors:
        return schema_errors
    global_part = data.get("global", {})
    loop_all = bool(global_part.get("loop_all", False)) if isinstance(global_part, dict) else False
    spec = MotionSpec(tuple(tracks), loop_all)
    report = validate_motion(spec, grouping)
    if not report.ok:
        return _report_errors(report)
    return spec


@dataclass(frozen=True)
class RepairPolicy:
    max_attempts: int = 3
    include_validation_errors_in_reprompt: bool = True

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class RepairOutcome:
    value: object
    attempts: int
    responses: tuple[str, ...]


class RepairExhausted(RuntimeError):
    def __init__(self, attempts: int, errors: list[RepairableError]):
        summary = "; ".join(f"{e.code}({e.subject})" for e in errors)
        super().__init__(f"no valid response after {attempts} attempts: {summary}")
        self.attempts = attempts
        self.errors = errors


def run_with_repair(cfg: TransportConfig, policy: RepairPolicy, build, parse) -> RepairOutcome:
    """Bounded request/parse loop; failed parses re-prompt with the previous
    response and its validation errors appended."""
    req = build()
    responses: list[str] = []
    errors: list[RepairableError] = []
    for attempt in range(1, policy.max_attempts + 1):
        response = transport_complete(cfg, req)
        responses.append(response.text)
        result = parse(response.text)
        if not isinstance(result, list):
            return RepairOutcome(value=result, attempts=attempt, responses=tuple(responses))
        errors = result
        if attempt < policy.max_attempts:
            follow_up = "The previous response was invalid. Return a corrected JSON object only."
            if policy.include_validation_errors_in_reprompt:
                details = json.dumps([e.to_wire() for e in errors], indent=2)
                follow_up = f"Validation errors:\n{details}\n{follow_up}"
            req = replace(
                req,
                user_parts=req.user_parts
                + (TextPart(f"Previous response:\n{response.text}"), TextPart(follow_up)),
            )
    raise RepairExhausted(policy.max_attempts, errors)
