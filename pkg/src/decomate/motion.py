"""Animation intermediate representation.

Tracks describe per-group property animations; easings are evaluable in
Python so non-CSS-native curves (elastic, bounce) can be sampled into
keyframes. A line-oriented DSL provides the deterministic authoring path.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

from .geometry import fmt_number
from .grouping import GroupingSpec, Issue, ValidationReport

__all__ = [
    "DslParseError",
    "Easing",
    "Keyframe",
    "MotionSpec",
    "MotionValidationError",
    "PROPERTIES",
    "Track",
    "expand_track_keyframes",
    "parse_motion_dsl",
    "print_motion_dsl",
    "property_kind",
    "track_from_wire",
    "sample_easing",
    "validate_motion",
]

PROPERTIES = ("translateX", "translateY", "rotate", "scale", "scaleX", "scaleY", "opacity")

_UNIT_OF = {
    "translateX": "px",
    "translateY": "px",
    "rotate": "deg",
    "scale": "",
    "scaleX": "",
    "scaleY": "",
    "opacity": "",
}

_KIND_OF = {
    "translateX": "translate",
    "translateY": "translate",
    "rotate": "rotate",
    "scale": "scale",
    "scaleX": "scale",
    "scaleY": "scale",
    "opacity": "opacity",
}

_PIVOT_KINDS = ("rotate", "scale")

_PRESET_BEZIER = {
    "ease": (0.25, 0.1, 0.25, 1.0),
    "ease-in": (0.42, 0.0, 1.0, 1.0),
    "ease-out": (0.0, 0.0, 0.58, 1.0),
    "ease-in-out": (0.42, 0.0, 0.58, 1.0),
}

DEFAULT_ELASTIC_PERIOD = 0.3
BEZIER_SOLVE_TOLERANCE = 1e-6


def property_kind(prop: str) -> str:
    """Map a property to its composition slot: translate/rotate/scale/opacity."""
    return _KIND_OF[prop]


def unit_of(prop: str) -> str:
    return _UNIT_OF[prop]


@dataclass(frozen=True)
class Easing:
    """Easing curve; `args` meaning depends on kind.

    kinds: linear, ease, ease-in, ease-out, ease-in-out,
    cubic-bezier(x1,y1,x2,y2), elastic-out(amplitude, period),
    bounce-out, steps(n).
    """

    kind: str = "linear"
    args: tuple[float, ...] = ()

    def __post_init__(self):
        k, a = self.kind, self.args
        if k in ("linear", "bounce-out") or k in _PRESET_BEZIER:
            if a:
                raise ValueError(f"{k} takes no parameters")
        elif k == "cubic-bezier":
            if len(a) != 4:
                raise ValueError("cubic-bezier takes 4 parameters")
            if not (0 <= a[0] <= 1 and 0 <= a[2] <= 1):
                raise ValueError("cubic-bezier x1/x2 must lie in [0,1]")
        elif k == "elastic-out":
            if len(a) != 2:
                raise ValueError("elastic-out takes (amplitude, period)")
            if a[0] < 1:
                raise ValueError("elastic amplitude must be >= 1")
            if a[1] <= 0:
                raise ValueError("elastic period must be > 0")
        elif k == "steps":
            if len(a) != 1 or a[0] < 1 or a[0] != int(a[0]):
                raise ValueError("steps takes one integer >= 1")
        else:
            raise ValueError(f"unknown easing kind {k!r}")

    @classmethod
    def cubic_bezier(cls, x1: float, y1: float, x2: float, y2: float) -> "Easing":
        return cls("cubic-bezier", (x1, y1, x2, y2))

    @classmethod
    def elastic_out(cls, amplitude: float = 1.0, period: float = DEFAULT_ELASTIC_PERIOD) -> "Easing":
        return cls("elastic-out", (amplitude, period))

    @classmethod
    def steps(cls, count: int) -> "Easing":
        return cls("steps", (float(count),))

    def is_css_native(self) -> bool:
        return self.kind not in ("elastic-out", "bounce-out")

    def css_timing_function(self) -> str:
        """CSS serialization for native kinds; sampled kinds use linear stops."""
        if self.kind == "cubic-bezier":
            return "cubic-bezier(%s)" % ",".join(fmt_number(v) for v in self.args)
        if self.kind == "steps":
            return "steps(%d)" % int(self.args[0])
        if self.is_css_native():
            return self.kind
        return "linear"

    def to_wire(self) -> dict:
        data: dict = {"kind": self.kind}
        if self.kind == "cubic-bezier":
            data.update(x1=self.args[0], y1=self.args[1], x2=self.args[2], y2=self.args[3])
        elif self.kind == "elastic-out":
            data.update(amplitude=self.args[0], period=self.args[1])
        elif self.kind == "steps":
            data.update(count=int(self.args[0]))
        return data

    @classmethod
    def from_wire(cls, data: dict) -> "Easing":
        kind = str(data.get("kind", "linear"))
        if kind == "cubic-bezier":
            return cls.cubic_bezier(
                float(data["x1"]), float(data["y1"]), float(data["x2"]), float(data["y2"])
            )
        if kind == "elastic-out":
            return cls.elastic_out(
                float(data.get("amplitude", 1.0)),
                float(data.get("period", DEFAULT_ELASTIC_PERIOD)),
            )
        if kind == "steps":
            return cls.steps(int(data["count"]))
        return cls(kind)


def _bezier_coords(p1: float, p2: float):
    c = 3.0 * p1
    b = 3.0 * (p2 - p1) - c
    a = 1.0 - c - b
    return a, b, c


def _bezier_at(a: float, b: float, c: float, t: float) -> float:
    return ((a * t + b) * t + c) * t


def _solve_bezier_x(x1: float, x2: float, u: float) -> float:
    """Find t with x(t) = u to within 1e-6; Newton with bisection fallback."""
    a, b, c = _bezier_coords(x1, x2)
    t = u
    for _ in range(12):
        err = _bezier_at(a, b, c, t) - u
        if abs(err) <= BEZIER_SOLVE_TOLERANCE:
            return t
        slope = (3.0 * a * t + 2.0 * b) * t + c
        if abs(slope) < 1e-12:
            break
        t = min(1.0, max(0.0, t - err / slope))
    lo, hi = 0.0, 1.0
    t = 0.5 * (lo + hi)
    for _ in range(64):
        xt = _bezier_at(a, b, c, t)
        if abs(xt - u) <= BEZIER_SOLVE_TOLERANCE:
            return t
        if xt < u:
            lo = t
        else:
            hi = t
        t = 0.5 * (lo + hi)
    return t


def sample_easing(e: Easing, u: float) -> float:
    """Evaluate an easing at progress u in [0,1]; endpoints are exact."""
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    kind = e.kind
    if kind == "linear":
        return u
    if kind in _PRESET_BEZIER or kind == "cubic-bezier":
        x1, y1, x2, y2 = e.args if kind == "cubic-bezier" else _PRESET_BEZIER[kind]
        t = _solve_bezier_x(x1, x2, u)
        a, b, c = _bezier_coords(y1, y2)
        return _bezier_at(a, b, c, t)
    if kind == "elastic-out":
        amplitude, period = e.args
        shift = period / (2 * math.pi) * math.asin(1.0 / amplitude)
        return amplitude * 2.0 ** (-10.0 * u) * math.sin((u - shift) * 2 * math.pi / period) + 1.0
    if kind == "bounce-out":
        n1, d1 = 7.5625, 2.75
        if u < 1 / d1:
            return n1 * u * u
        if u < 2 / d1:
            v = u - 1.5 / d1
            return n1 * v * v + 0.75
        if u < 2.5 / d1:
            v = u - 2.25 / d1
            return n1 * v * v + 0.9375
        v = u - 2.625 / d1
        return n1 * v * v + 0.984375
    if kind == "steps":
        n = int(e.args[0])
        return math.floor(u * n) / n
    raise ValueError(f"unknown easing kind {kind!r}")


@dataclass(frozen=True)
class Keyframe:
    offset: float
    value: float


@dataclass(frozen=True)
class Track:
    group: str
    property: str
    from_value: float
    to_value: float
    duration_ms: int
    delay_ms: int = 0
    iterations: int | None = 1  # None means infinite
    direction: str = "normal"  # normal | alternate
    easing: Easing = Easing()
    origin: str | tuple[float, float] | None = None  # "auto" | (x, y)

    def __post_init__(self):
        if self.origin is None and property_kind(self.property) in _PIVOT_KINDS:
            object.__setattr__(self, "origin", "auto")

    @property
    def unit(self) -> str:
        return unit_of(self.property)

    @property
    def kind(self) -> str:
        return property_kind(self.property)

    def to_wire(self) -> dict:
        data = {
            "group": self.group,
            "property": self.property,
            "from": fmt_number(self.from_value) + self.unit,
            "to": fmt_number(self.to_value) + self.unit,
            "duration_ms": self.duration_ms,
            "delay_ms": self.delay_ms,
            "iterations": "infinite" if self.iterations is None else self.iterations,
            "direction": self.direction,
            "easing": self.easing.to_wire(),
        }
        if self.origin == "auto":
            data["origin"] = "auto"
        elif isinstance(self.origin, tuple):
            data["origin"] = {"x": self.origin[0], "y": self.origin[1]}
        return data


def parse_value(raw, prop: str) -> float:
    """Parse a scalar with optional unit; the unit must match the property."""
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    text = str(raw).strip()
    unit = unit_of(prop)
    m = re.fullmatch(r"([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([a-z%]*)", text)
    if m is None:
        raise ValueError(f"bad value {raw!r} for {prop}")
    suffix = m.group(2)
    if suffix not in ("", unit):
        raise ValueError(f"value {raw!r} has unit {suffix!r}, {prop} expects {unit or 'no unit'!r}")
    return float(m.group(1))


def track_from_wire(data: dict) -> Track:
    prop = str(data.get("property", ""))
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}")
    iterations_raw = data.get("iterations", 1)
    if iterations_raw == "infinite":
        iterations = None
    else:
        iterations = int(iterations_raw)
    origin_raw = data.get("origin")
    origin: str | tuple[float, float] | None
    if origin_raw is None or origin_raw == "auto":
        origin = "auto" if origin_raw == "auto" else None
    elif isinstance(origin_raw, dict):
        origin = (float(origin_raw["x"]), float(origin_raw["y"]))
    else:
        raise ValueError(f"bad origin {origin_raw!r}")
    return Track(
        group=str(data.get("group", "")),
        property=prop,
        from_value=parse_value(data.get("from", 0), prop),
        to_value=parse_value(data.get("to", 0), prop),
        duration_ms=int(data.get("duration_ms", 0)),
        delay_ms=int(data.get("delay_ms", 0)),
        iterations=iterations,
        direction=str(data.get("direction", "normal")),
        easing=Easing.from_wire(data.get("easing", {"kind": "linear"})),
        origin=origin,
    )


@dataclass(frozen=True)
class MotionSpec:
    tracks: tuple[Track, ...] = ()
    loop_all: bool = False

    def tracks_for(self, group: str) -> list[Track]:
        return [t for t in self.tracks if t.group == group]

    def to_wire(self) -> dict:
        return {
            "tracks": [t.to_wire() for t in self.tracks],
            "global": {"loop_all": self.loop_all},
        }

    @classmethod
    def from_wire(cls, data: dict) -> "MotionSpec":
        tracks = tuple(track_from_wire(t) for t in data.get("tracks", []))
        loop_all = bool(data.get("global", {}).get("loop_all", False))
        return cls(tracks, loop_all)


def validate_motion(spec: MotionSpec, grouping: GroupingSpec) -> ValidationReport:
    """Schema gate: group names must exist, values in range, one track per
    (group, property kind)."""
    known = set(grouping.names())
    issues: list[Issue] = []
    seen: set[tuple[str, str]] = set()
    for t in spec.tracks:
        where = f"{t.group}/{t.property}"
        if t.property not in PROPERTIES:
            issues.append(Issue("InvalidProperty", where, f"unknown property {t.property!r}"))
            continue
        if t.group not in known:
            issues.append(Issue("UnknownGroup", t.group, f"no group named {t.group!r}"))
        slot = (t.group, t.kind)
        if slot in seen:
            issues.append(
                Issue("DuplicateTrack", where, f"second {t.kind} track for group {t.group!r}")
            )
        seen.add(slot)
        if not (math.isfinite(t.from_value) and math.isfinite(t.to_value)):
            issues.append(Issue("ValueOutOfRange", where, "values must be finite"))
        if t.property == "opacity":
            for v in (t.from_value, t.to_value):
                if not 0.0 <= v <= 1.0:
                    issues.append(Issue("ValueOutOfRange", where, f"opacity {v} outside [0,1]"))
        if t.duration_ms < 16:
            issues.append(Issue("ValueOutOfRange", where, f"duration {t.duration_ms}ms below 16ms"))
        if t.delay_ms < 0:
            issues.append(Issue("ValueOutOfRange", where, "negative delay"))
        if t.iterations is not None and t.iterations < 1:
            issues.append(Issue("ValueOutOfRange", where, "iterations must be >= 1"))
        if t.direction not in ("normal", "alternate"):
            issues.append(Issue("ValueOutOfRange", where, f"bad direction {t.direction!r}"))
        if t.kind in _PIVOT_KINDS and t.origin is None:
            issues.append(Issue("MissingOrigin", where, f"{t.property} needs an origin"))
    return ValidationReport(tuple(issues))


class MotionValidationError(ValueError):
    def __init__(self, report: ValidationReport):
        lines = "; ".join(f"{i.code}({i.subject})" for i in report.errors())
        super().__init__(f"motion spec failed validation: {lines}")
        self.report = report


def expand_track_keyframes(t: Track, n: int = 33) -> list[Keyframe]:
    """Sample the track's easing into n keyframes at offsets i/(n-1)."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    span = t.to_value - t.from_value
    out = []
    for i in range(n):
        offset = i / (n - 1)
        out.append(Keyframe(offset, t.from_value + span * sample_easing(t.easing, offset)))
    return out


class DslParseError(ValueError):
    def __init__(self, line: int, column: int, expected: str):
        super().__init__(f"line {line}, column {column}: expected {expected}")
        self.line = line
        self.column = column
        self.expected = expected


_EASING_CALL = re.compile(r"^([a-z-]+)\(([^)]*)\)$")

_EASING_NAMES = {
    "linear": Easing(),
    "ease": Easing("ease"),
    "ease-in": Easing("ease-in"),
    "ease-out": Easing("ease-out"),
    "ease-in-out": Easing("ease-in-out"),
    "elastic": Easing.elastic_out(),
    "bounce": Easing("bounce-out"),
}


def _parse_easing_token(token: str, line: int, column: int) -> Easing:
    if token in _EASING_NAMES:
        return _EASING_NAMES[token]
    m = _EASING_CALL.match(token)
    if m:
        name, body = m.group(1), m.group(2)
        try:
            args = tuple(float(p) for p in body.split(",") if p.strip())
            if name == "elastic":
                return Easing.elastic_out(*args)
            if name == "steps":
                return Easing.steps(int(args[0]))
            if name == "cubic-bezier":
                return Easing.cubic_bezier(*args)
        except (TypeError, ValueError):
            raise DslParseError(line, column, f"valid {name} parameters") from None
    raise DslParseError(line, column, "easing name")


class _LineTokens:
    def __init__(self, line_no: int, text: str):
        self.line = line_no
        self.tokens = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", text)]
        self.pos = 0
        self.end_col = len(text) + 1

    def peek(self) -> str | None:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][1]
        return None

    def next(self, expected: str) -> tuple[int, str]:
        if self.pos >= len(self.tokens):
            raise DslParseError(self.line, self.end_col, expected)
        col, tok = self.tokens[self.pos]
        self.pos += 1
        return col, tok

    def expect(self, literal: str):
        col, tok = self.next(f"'{literal}'")
        if tok != literal:
            raise DslParseError(self.line, col, f"'{literal}'")

    def number(self, expected: str) -> tuple[int, float]:
        col, tok = self.next(expected)
        try:
            return col, float(tok)
        except ValueError:
            raise DslParseError(self.line, col, expected) from None

    def integer(self, expected: str) -> int:
        col, value = self.number(expected)
        if value != int(value):
            raise DslParseError(self.line, col, expected)
        return int(value)


def _parse_dsl_line(tokens: _LineTokens) -> Track:
    tokens.expect("anim")
    col, group = tokens.next("group name")
    if group.endswith(":"):
        group = group[:-1]
        if not group:
            raise DslParseError(tokens.line, col, "group name")
    else:
        tokens.expect(":")
    col, prop = tokens.next("property name")
    if prop not in PROPERTIES:
        raise DslParseError(tokens.line, col, "property name")

    tokens.expect("from")
    col, raw = tokens.next("value")
    try:
        from_value = parse_value(raw, prop)
    except ValueError:
        raise DslParseError(tokens.line, col, f"{prop} value") from None
    tokens.expect("to")
    col, raw = tokens.next("value")
    try:
        to_value = parse_value(raw, prop)
    except ValueError:
        raise DslParseError(tokens.line, col, f"{prop} value") from None
    tokens.expect("dur")
    duration = tokens.integer("duration in ms")

    delay = 0
    easing = Easing()
    iterations: int | None = 1
    direction = "normal"
    origin: str | tuple[float, float] | None = None
    while tokens.peek() is not None:
        col, word = tokens.next("track option")
        if word == "delay":
            delay = tokens.integer("delay in ms")
        elif word == "ease":
            col, token = tokens.next("easing name")
            easing = _parse_easing_token(token, tokens.line, col)
        elif word == "repeat":
            col, token = tokens.next("'infinite' or a count")
            if token == "infinite":
                iterations = None
            else:
                try:
                    iterations = int(token)
                except ValueError:
                    raise DslParseError(tokens.line, col, "'infinite' or a count") from None
        elif word == "alternate":
            direction = "alternate"
        elif word == "origin":
            _, x = tokens.number("origin x")
            _, y = tokens.number("origin y")
            origin = (x, y)
        else:
            raise DslParseError(tokens.line, col, "track option")

    return Track(
        group=group,
        property=prop,
        from_value=from_value,
        to_value=to_value,
        duration_ms=duration,
        delay_ms=delay,
        iterations=iterations,
        direction=direction,
        easing=easing,
        origin=origin,
    )


def parse_motion_dsl(text: str, grouping: GroupingSpec) -> MotionSpec:
    """Parse DSL statements (one per line) into a validated MotionSpec.

    Grammar per line:
      anim <group> : <property> from <value> to <value> dur <ms>
           [delay <ms>] [ease <easing>] [repeat <n|infinite>] [alternate]
           [origin <x> <y>]
    Blank lines and lines starting with '#' are skipped.
    """
    tracks = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tracks.append(_parse_dsl_line(_LineTokens(line_no, raw)))
    spec = MotionSpec(tuple(tracks))
    report = validate_motion(spec, grouping)
    if not report.ok:
        raise MotionValidationError(report)
    return spec


def _easing_dsl(e: Easing) -> str:
    if e.kind == "elastic-out":
        if e.args == (1.0, DEFAULT_ELASTIC_PERIOD):
            return "elastic"
        return "elastic(%s)" % ",".join(fmt_number(v) for v in e.args)
    if e.kind == "bounce-out":
        return "bounce"
    if e.kind == "steps":
        return "steps(%d)" % int(e.args[0])
    if e.kind == "cubic-bezier":
        return "cubic-bezier(%s)" % ",".join(fmt_number(v) for v in e.args)
    return e.kind


def print_motion_dsl(spec: MotionSpec) -> str:
    """Canonical printer; parse_motion_dsl inverts it on valid specs."""
    lines = []
    for t in spec.tracks:
        parts = [
            f"anim {t.group}: {t.property}",
            f"from {fmt_number(t.from_value)}{t.unit}",
            f"to {fmt_number(t.to_value)}{t.unit}",
            f"dur {t.duration_ms}",
        ]
        if t.delay_ms:
            parts.append(f"delay {t.delay_ms}")
        if t.easing != Easing():
            parts.append(f"ease {_easing_dsl(t.easing)}")
        if t.iterations is None:
            parts.append("repeat infinite")
        elif t.iterations != 1:
            parts.append(f"repeat {t.iterations}")
        if t.direction == "alternate":
            parts.append("alternate")
        if isinstance(t.origin, tuple):
            parts.append(f"origin {fmt_number(t.origin[0])} {fmt_number(t.origin[1])}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")
