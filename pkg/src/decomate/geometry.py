"""2D affine transforms, SVG path data, and bounding boxes.

All coordinates are absolute user units. Every path command is normalized
to cubic Bezier segments so downstream bbox and overlay math has a single
segment type to deal with.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Iterator

if TYPE_CHECKING:
    from .svgdoc import SvgDocument, SvgNode

__all__ = [
    "Affine2D",
    "CubicSegment",
    "EmptyGroup",
    "PathData",
    "PathParseError",
    "Rect",
    "Subpath",
    "TransformParseError",
    "UnknownNodeId",
    "fmt_number",
    "fmt_number_exact",
    "group_bbox",
    "node_bbox",
    "parse_path_data",
    "parse_transform_list",
    "path_bbox",
    "shape_to_path",
]


def fmt_number(x: float) -> str:
    """Format a number with up to 6 decimals, trailing zeros trimmed."""
    text = f"{x:.6f}".rstrip("0").rstrip(".")
    if text in ("-0", ""):
        return "0"
    return text


def fmt_number_exact(x: float) -> str:
    """Like fmt_number, but falls back to the shortest exact representation
    when 6 decimals would lose precision (keeps parse/serialize lossless)."""
    text = fmt_number(x)
    return text if float(text) == x else repr(x)


@dataclass(frozen=True)
class Affine2D:
    """SVG matrix(a b c d e f): (x, y) -> (a*x + c*y + e, b*x + d*y + f)."""

    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 1.0
    e: float = 0.0
    f: float = 0.0

    @classmethod
    def identity(cls) -> "Affine2D":
        return cls()

    @classmethod
    def translation(cls, tx: float, ty: float = 0.0) -> "Affine2D":
        return cls(1, 0, 0, 1, tx, ty)

    @classmethod
    def scaling(cls, sx: float, sy: float | None = None) -> "Affine2D":
        return cls(sx, 0, 0, sx if sy is None else sy, 0, 0)

    @classmethod
    def rotation(cls, deg: float, cx: float = 0.0, cy: float = 0.0) -> "Affine2D":
        rad = math.radians(deg)
        cos, sin = math.cos(rad), math.sin(rad)
        if cx == 0 and cy == 0:
            return cls(cos, sin, -sin, cos, 0, 0)
        # translate(cx,cy) rotate(deg) translate(-cx,-cy)
        return cls(cos, sin, -sin, cos, cx - cos * cx + sin * cy, cy - sin * cx - cos * cy)

    @classmethod
    def skew_x(cls, deg: float) -> "Affine2D":
        return cls(1, 0, math.tan(math.radians(deg)), 1, 0, 0)

    @classmethod
    def skew_y(cls, deg: float) -> "Affine2D":
        return cls(1, math.tan(math.radians(deg)), 0, 1, 0, 0)

    def compose(self, other: "Affine2D") -> "Affine2D":
        """Matrix product self * other (other is applied to points first)."""
        a1, b1, c1, d1, e1, f1 = self.a, self.b, self.c, self.d, self.e, self.f
        a2, b2, c2, d2, e2, f2 = other.a, other.b, other.c, other.d, other.e, other.f
        return Affine2D(
            a1 * a2 + c1 * b2,
            b1 * a2 + d1 * b2,
            a1 * c2 + c1 * d2,
            b1 * c2 + d1 * d2,
            a1 * e2 + c1 * f2 + e1,
            b1 * e2 + d1 * f2 + f1,
        )

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.a * x + self.c * y + self.e, self.b * x + self.d * y + self.f)

    def is_identity(self) -> bool:
        return self == Affine2D()

    def almost_equal(self, other: "Affine2D", tol: float = 1e-9) -> bool:
        return all(
            abs(p - q) <= tol
            for p, q in zip(self.as_tuple(), other.as_tuple())
        )

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.a, self.b, self.c, self.d, self.e, self.f)

    def to_svg(self) -> str:
        return "matrix(%s)" % " ".join(fmt_number_exact(v) for v in self.as_tuple())


class TransformParseError(ValueError):
    """Bad SVG transform list; `position` is the character offset."""

    def __init__(self, position: int, message: str):
        super().__init__(f"transform parse error at {position}: {message}")
        self.position = position


_TRANSFORM_FN = re.compile(r"\s*([A-Za-z]+)\s*\(([^)]*)\)")
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")

_TRANSFORM_ARITY = {
    "translate": (1, 2),
    "scale": (1, 2),
    "rotate": (1, 3),
    "skewX": (1, 1),
    "skewY": (1, 1),
    "matrix": (6, 6),
}


def parse_transform_list(text: str) -> Affine2D:
    """Parse an SVG transform list into one left-to-right composed matrix."""
    result = Affine2D()
    pos = 0
    while pos < len(text):
        rest = text[pos:]
        if not rest.strip(" ,\t\n\r"):
            break
        m = _TRANSFORM_FN.match(text, pos)
        if m is None:
            raise TransformParseError(pos, "expected transform function")
        name, body = m.group(1), m.group(2)
        if name not in _TRANSFORM_ARITY:
            raise TransformParseError(m.start(1), f"unknown transform {name!r}")
        args = [float(n) for n in _NUMBER.findall(body)]
        lo, hi = _TRANSFORM_ARITY[name]
        if not (lo <= len(args) <= hi) or (name == "rotate" and len(args) == 2):
            raise TransformParseError(m.start(2), f"{name} takes {lo}..{hi} numbers")
        if name == "translate":
            step = Affine2D.translation(args[0], args[1] if len(args) > 1 else 0.0)
        elif name == "scale":
            step = Affine2D.scaling(args[0], args[1] if len(args) > 1 else None)
        elif name == "rotate":
            step = Affine2D.rotation(*args)
        elif name == "skewX":
            step = Affine2D.skew_x(args[0])
        elif name == "skewY":
            step = Affine2D.skew_y(args[0])
        else:
            step = Affine2D(*args)
        result = result.compose(step)
        pos = m.end()
    return result


@dataclass(frozen=True)
class Rect:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise ValueError("rect min must not exceed max")

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    @property
    def center(self) -> tuple[float, float]:
        return ((self.min_x + self.max_x) / 2, (self.min_y + self.max_y) / 2)

    def union(self, other: "Rect") -> "Rect":
        return Rect(
            min(self.min_x, other.min_x),
            min(self.min_y, other.min_y),
            max(self.max_x, other.max_x),
            max(self.max_y, other.max_y),
        )

    def contains_point(self, x: float, y: float, tol: float = 0.0) -> bool:
        return (
            self.min_x - tol <= x <= self.max_x + tol
            and self.min_y - tol <= y <= self.max_y + tol
        )


Point = tuple[float, float]


@dataclass(frozen=True)
class CubicSegment:
    c1: Point
    c2: Point
    end: Point


@dataclass(frozen=True)
class Subpath:
    start: Point
    segments: tuple[CubicSegment, ...]
    closed: bool = False

    def points(self) -> Iterator[Point]:
        yield self.start
        for seg in self.segments:
            yield seg.c1
            yield seg.c2
            yield seg.end


@dataclass(frozen=True)
class PathData:
    subpaths: tuple[Subpath, ...]

    def transformed(self, xf: Affine2D) -> "PathData":
        """Apply an affine to every control point (exact for cubics)."""
        subs = []
        for sp in self.subpaths:
            segs = tuple(
                CubicSegment(xf.apply(*s.c1), xf.apply(*s.c2), xf.apply(*s.end))
                for s in sp.segments
            )
            subs.append(Subpath(xf.apply(*sp.start), segs, sp.closed))
        return PathData(tuple(subs))


class PathParseError(ValueError):
    """Bad path data; `position` is the character offset, `expected` the missing token."""

    def __init__(self, position: int, expected: str):
        super().__init__(f"path parse error at {position}: expected {expected}")
        self.position = position
        self.expected = expected


def _line_cubic(x0: float, y0: float, x1: float, y1: float) -> CubicSegment:
    # Exact degree elevation of a line to a cubic.
    return CubicSegment(
        (x0 + (x1 - x0) / 3, y0 + (y1 - y0) / 3),
        (x0 + 2 * (x1 - x0) / 3, y0 + 2 * (y1 - y0) / 3),
        (x1, y1),
    )


def _quad_cubic(x0: float, y0: float, qx: float, qy: float, x1: float, y1: float) -> CubicSegment:
    # Exact degree elevation of a quadratic.
    return CubicSegment(
        (x0 + 2 * (qx - x0) / 3, y0 + 2 * (qy - y0) / 3),
        (x1 + 2 * (qx - x1) / 3, y1 + 2 * (qy - y1) / 3),
        (x1, y1),
    )


def _arc_cubics(
    x1: float, y1: float,
    rx: float, ry: float,
    phi_deg: float,
    large_arc: bool, sweep: bool,
    x2: float, y2: float,
) -> list[CubicSegment]:
    """Elliptical arc endpoint form to cubics, at most 90 degrees per segment."""
    if x1 == x2 and y1 == y2:
        return []
    rx, ry = abs(rx), abs(ry)
    if rx == 0 or ry == 0:
        return [_line_cubic(x1, y1, x2, y2)]
    phi = math.radians(phi_deg % 360)
    cosp, sinp = math.cos(phi), math.sin(phi)

    dx, dy = (x1 - x2) / 2, (y1 - y2) / 2
    x1p = cosp * dx + sinp * dy
    y1p = -sinp * dx + cosp * dy

    lam = x1p**2 / rx**2 + y1p**2 / ry**2
    if lam > 1:
        s = math.sqrt(lam)
        rx, ry = rx * s, ry * s

    num = rx**2 * ry**2 - rx**2 * y1p**2 - ry**2 * x1p**2
    den = rx**2 * y1p**2 + ry**2 * x1p**2
    coef = math.sqrt(max(0.0, num / den))
    if large_arc == sweep:
        coef = -coef
    cxp = coef * rx * y1p / ry
    cyp = -coef * ry * x1p / rx

    cx = cosp * cxp - sinp * cyp + (x1 + x2) / 2
    cy = sinp * cxp + cosp * cyp + (y1 + y2) / 2

    def angle(ux, uy, vx, vy):
        dot = ux * vx + uy * vy
        norm = math.hypot(ux, uy) * math.hypot(vx, vy)
        a = math.acos(max(-1.0, min(1.0, dot / norm)))
        if ux * vy - uy * vx < 0:
            a = -a
        return a

    theta1 = angle(1, 0, (x1p - cxp) / rx, (y1p - cyp) / ry)
    dtheta = angle(
        (x1p - cxp) / rx, (y1p - cyp) / ry,
        (-x1p - cxp) / rx, (-y1p - cyp) / ry,
    ) % (2 * math.pi)
    if not sweep and dtheta > 0:
        dtheta -= 2 * math.pi
    if sweep and dtheta < 0:
        dtheta += 2 * math.pi

    n = max(1, math.ceil(abs(dtheta) / (math.pi / 2) - 1e-12))
    per = dtheta / n
    # Tangent-exact control distance, scaled toward the minimax-optimal value
    # (keeps radial error < 2e-4 of the radius even for 90-degree segments).
    k = 4.0 / 3.0 * math.tan(per / 4)
    k *= 1.0 - 0.00067 * (abs(per) / (math.pi / 2)) ** 4

    def ellipse_point(t):
        ex, ey = rx * math.cos(t), ry * math.sin(t)
        return (cosp * ex - sinp * ey + cx, sinp * ex + cosp * ey + cy)

    def ellipse_deriv(t):
        ex, ey = -rx * math.sin(t), ry * math.cos(t)
        return (cosp * ex - sinp * ey, sinp * ex + cosp * ey)

    segments = []
    p0 = ellipse_point(theta1)
    for i in range(n):
        t0 = theta1 + i * per
        t1 = t0 + per
        d0 = ellipse_deriv(t0)
        d1 = ellipse_deriv(t1)
        p1 = (x2, y2) if i == n - 1 else ellipse_point(t1)
        segments.append(
            CubicSegment(
                (p0[0] + k * d0[0], p0[1] + k * d0[1]),
                (p1[0] - k * d1[0], p1[1] - k * d1[1]),
                p1,
            )
        )
        p0 = p1
    return segments


class _PathScanner:
    """Tokenizer over path data with position tracking for errors."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_separators(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n,":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_separators()
        return self.pos >= len(self.text)

    def peek_command(self) -> str | None:
        self.skip_separators()
        if self.pos < len(self.text) and self.text[self.pos].isalpha():
            return self.text[self.pos]
        return None

    def take_command(self) -> str:
        cmd = self.text[self.pos]
        self.pos += 1
        return cmd

    def number(self, expected: str) -> float:
        self.skip_separators()
        m = _NUMBER.match(self.text, self.pos)
        if m is None:
            raise PathParseError(self.pos, expected)
        self.pos = m.end()
        return float(m.group())

    def flag(self, expected: str) -> bool:
        # Arc flags are single chars and may be packed without separators.
        self.skip_separators()
        if self.pos < len(self.text) and self.text[self.pos] in "01":
            value = self.text[self.pos] == "1"
            self.pos += 1
            return value
        raise PathParseError(self.pos, expected)

    def starts_number(self) -> bool:
        self.skip_separators()
        return _NUMBER.match(self.text, self.pos) is not None


def parse_path_data(d: str) -> PathData:
    """Parse SVG path data into absolute cubic-only subpaths.

    Supports the full command grammar (M/L/H/V/C/S/Q/T/A/Z and the relative
    forms); quadratics are degree-elevated and arcs converted per the SVG
    endpoint-to-center parameterization.
    """
    scanner = _PathScanner(d)
    if scanner.at_end():
        raise PathParseError(0, "path command")

    subpaths: list[Subpath] = []
    segments: list[CubicSegment] = []
    start: Point | None = None
    cur = (0.0, 0.0)
    last_cubic_c2: Point | None = None
    last_quad_ctrl: Point | None = None
    just_closed = False

    def flush(closed: bool):
        nonlocal segments, start
        if start is not None:
            subpaths.append(Subpath(start, tuple(segments), closed))
        segments = []
        start = None

    first = scanner.peek_command()
    if first not in ("M", "m"):
        raise PathParseError(scanner.pos, "moveto")

    cmd = ""
    while not scanner.at_end():
        next_cmd = scanner.peek_command()
        if next_cmd is not None:
            cmd = scanner.take_command()
        elif cmd in ("M", "m"):
            # Implicit lineto after a moveto's first pair.
            cmd = "L" if cmd == "M" else "l"
        elif cmd in ("Z", "z") or not scanner.starts_number():
            raise PathParseError(scanner.pos, "path command")
        rel = cmd.islower()
        op = cmd.upper()
        if op not in "MLHVCSQTAZ":
            raise PathParseError(scanner.pos - 1, "path command")

        if op == "Z":
            if start is not None:
                closing_at = start
                flush(True)
                cur = closing_at
                just_closed = True
            last_cubic_c2 = last_quad_ctrl = None
            continue

        if op == "M":
            x = scanner.number("x-coordinate")
            y = scanner.number("y-coordinate")
            if rel:
                x, y = cur[0] + x, cur[1] + y
            flush(False)
            start = (x, y)
            cur = (x, y)
            last_cubic_c2 = last_quad_ctrl = None
            just_closed = False
            continue

        # Drawing command after Z reopens a subpath at the closed start point.
        if start is None:
            start = cur
            just_closed = False

        if op in ("L", "H", "V"):
            if op == "L":
                x = scanner.number("x-coordinate")
                y = scanner.number("y-coordinate")
                if rel:
                    x, y = cur[0] + x, cur[1] + y
            elif op == "H":
                x = scanner.number("x-coordinate")
                if rel:
                    x += cur[0]
                y = cur[1]
            else:
                y = scanner.number("y-coordinate")
                if rel:
                    y += cur[1]
                x = cur[0]
            segments.append(_line_cubic(cur[0], cur[1], x, y))
            cur = (x, y)
            last_cubic_c2 = last_quad_ctrl = None
        elif op in ("C", "S"):
            if op == "C":
                c1 = (scanner.number("x1"), scanner.number("y1"))
                if rel:
                    c1 = (cur[0] + c1[0], cur[1] + c1[1])
            else:
                c1 = (
                    (2 * cur[0] - last_cubic_c2[0], 2 * cur[1] - last_cubic_c2[1])
                    if last_cubic_c2 is not None
                    else cur
                )
            c2 = (scanner.number("x2"), scanner.number("y2"))
            end = (scanner.number("x-coordinate"), scanner.number("y-coordinate"))
            if rel:
                c2 = (cur[0] + c2[0], cur[1] + c2[1])
                end = (cur[0] + end[0], cur[1] + end[1])
            segments.append(CubicSegment(c1, c2, end))
            cur = end
            last_cubic_c2 = c2
            last_quad_ctrl = None
        elif op in ("Q", "T"):
            if op == "Q":
                q = (scanner.number("x1"), scanner.number("y1"))
                if rel:
                    q = (cur[0] + q[0], cur[1] + q[1])
            else:
                q = (
                    (2 * cur[0] - last_quad_ctrl[0], 2 * cur[1] - last_quad_ctrl[1])
                    if last_quad_ctrl is not None
                    else cur
                )
            end = (scanner.number("x-coordinate"), scanner.number("y-coordinate"))
            if rel:
                end = (cur[0] + end[0], cur[1] + end[1])
            segments.append(_quad_cubic(cur[0], cur[1], q[0], q[1], end[0], end[1]))
            cur = end
            last_quad_ctrl = q
            last_cubic_c2 = None
        elif op == "A":
            rx = scanner.number("rx")
            ry = scanner.number("ry")
            rot = scanner.number("x-axis-rotation")
            large = scanner.flag("large-arc-flag")
            sweep = scanner.flag("sweep-flag")
            end = (scanner.number("x-coordinate"), scanner.number("y-coordinate"))
            if rel:
                end = (cur[0] + end[0], cur[1] + end[1])
            segments.extend(_arc_cubics(cur[0], cur[1], rx, ry, rot, large, sweep, *end))
            cur = end
            last_cubic_c2 = last_quad_ctrl = None

    flush(False)
    if not subpaths and not just_closed:
        raise PathParseError(len(d), "path command")
    return PathData(tuple(subpaths))


def _cubic_axis_extrema(p0: float, p1: float, p2: float, p3: float) -> list[float]:
    """Interior parameters where one coordinate of a cubic has zero derivative."""
    # B'(t) coefficients: a*t^2 + b*t + c
    a = 3 * (-p0 + 3 * p1 - 3 * p2 + p3)
    b = 6 * (p0 - 2 * p1 + p2)
    c = 3 * (p1 - p0)
    roots = []
    if abs(a) < 1e-12:
        if abs(b) > 1e-12:
            roots.append(-c / b)
    else:
        disc = b * b - 4 * a * c
        if disc >= 0:
            sq = math.sqrt(disc)
            roots.append((-b + sq) / (2 * a))
            roots.append((-b - sq) / (2 * a))
    return [t for t in roots if 0.0 < t < 1.0]


def _cubic_at(p0: float, p1: float, p2: float, p3: float, t: float) -> float:
    s = 1 - t
    return s * s * s * p0 + 3 * s * s * t * p1 + 3 * s * t * t * p2 + t * t * t * p3


def path_bbox(p: PathData) -> Rect:
    """Tight bbox from endpoints plus per-axis cubic derivative roots."""
    xs: list[float] = []
    ys: list[float] = []
    for sp in p.subpaths:
        x0, y0 = sp.start
        xs.append(x0)
        ys.append(y0)
        for seg in sp.segments:
            (x1, y1), (x2, y2), (x3, y3) = seg.c1, seg.c2, seg.end
            xs.append(x3)
            ys.append(y3)
            for t in _cubic_axis_extrema(x0, x1, x2, x3):
                xs.append(_cubic_at(x0, x1, x2, x3, t))
            for t in _cubic_axis_extrema(y0, y1, y2, y3):
                ys.append(_cubic_at(y0, y1, y2, y3, t))
            x0, y0 = x3, y3
    if not xs:
        raise ValueError("empty path")
    return Rect(min(xs), min(ys), max(xs), max(ys))


# Circle quadrant as a cubic: control distance factor.
_KAPPA = 4.0 * (math.sqrt(2) - 1) / 3.0


def _ellipse_path(cx: float, cy: float, rx: float, ry: float) -> PathData:
    k = _KAPPA
    p = [
        (cx + rx, cy),
        (cx, cy + ry),
        (cx - rx, cy),
        (cx, cy - ry),
    ]
    ctrl = [
        ((cx + rx, cy + k * ry), (cx + k * rx, cy + ry)),
        ((cx - k * rx, cy + ry), (cx - rx, cy + k * ry)),
        ((cx - rx, cy - k * ry), (cx - k * rx, cy - ry)),
        ((cx + k * rx, cy - ry), (cx + rx, cy - k * ry)),
    ]
    segments = tuple(
        CubicSegment(ctrl[i][0], ctrl[i][1], p[(i + 1) % 4]) for i in range(4)
    )
    return PathData((Subpath(p[0], segments, True),))


def _poly_path(points: Iterable[float], closed: bool) -> PathData:
    pts = list(points)
    pairs = [(pts[i], pts[i + 1]) for i in range(0, len(pts) - 1, 2)]
    if not pairs:
        raise ValueError("polyline needs at least one point")
    segments = [
        _line_cubic(pairs[i][0], pairs[i][1], pairs[i + 1][0], pairs[i + 1][1])
        for i in range(len(pairs) - 1)
    ]
    if closed and len(pairs) > 1:
        segments.append(_line_cubic(*pairs[-1], *pairs[0]))
    return PathData((Subpath(pairs[0], tuple(segments), closed),))


def _floats(node_attrs: dict, *names: str, default: float = 0.0) -> list[float]:
    return [float(node_attrs.get(n, default)) for n in names]


def shape_to_path(node: "SvgNode") -> PathData:
    """Convert a leaf shape node into cubic-only path geometry.

    Text, image, and use leaves degrade to their anchor point or declared box
    (no font metrics, no reference expansion).
    """
    kind = node.kind
    attrs = node.attrs
    if kind == "path":
        return parse_path_data(attrs.get("d", ""))
    if kind == "rect":
        x, y = _floats(attrs, "x", "y")
        w, h = _floats(attrs, "width", "height")
        return _poly_path([x, y, x + w, y, x + w, y + h, x, y + h], True)
    if kind == "circle":
        cx, cy = _floats(attrs, "cx", "cy")
        r = float(attrs.get("r", 0))
        return _ellipse_path(cx, cy, r, r)
    if kind == "ellipse":
        cx, cy = _floats(attrs, "cx", "cy")
        rx, ry = _floats(attrs, "rx", "ry")
        return _ellipse_path(cx, cy, rx, ry)
    if kind == "line":
        x1, y1, x2, y2 = _floats(attrs, "x1", "y1", "x2", "y2")
        return _poly_path([x1, y1, x2, y2], False)
    if kind in ("polyline", "polygon"):
        nums = [float(n) for n in _NUMBER.findall(attrs.get("points", ""))]
        return _poly_path(nums, kind == "polygon")
    if kind in ("image", "use") and "width" in attrs and "height" in attrs:
        x, y = _floats(attrs, "x", "y")
        w, h = _floats(attrs, "width", "height")
        return _poly_path([x, y, x + w, y, x + w, y + h, x, y + h], True)
    if kind in ("text", "image", "use"):
        x, y = _floats(attrs, "x", "y")
        return PathData((Subpath((x, y), (), False),))
    raise ValueError(f"no geometry for node kind {kind!r}")


class UnknownNodeId(KeyError):
    def __init__(self, node_id: str):
        super().__init__(node_id)
        self.node_id = node_id


class EmptyGroup(ValueError):
    pass


def node_bbox(node: "SvgNode", outer: Affine2D | None = None) -> Rect:
    """Bbox of one node (leaf or atomic group) under an outer transform.

    Control points are transformed before extrema extraction, so the result
    stays tight under rotation. Stroke width is ignored (geometric bbox).
    """
    xf = outer or Affine2D()
    if node.transform is not None:
        xf = xf.compose(node.transform)
    if node.kind == "group":
        box: Rect | None = None
        for child in node.children:
            child_box = node_bbox(child, xf)
            box = child_box if box is None else box.union(child_box)
        if box is None:
            raise EmptyGroup("group node has no children with geometry")
        return box
    path = shape_to_path(node)
    if not xf.is_identity():
        path = path.transformed(xf)
    return path_bbox(path)


def group_bbox(doc: "SvgDocument", members: list[str]) -> Rect:
    """Union of member bboxes, member transforms applied."""
    if not members:
        raise EmptyGroup("member list is empty")
    box: Rect | None = None
    for node_id in members:
        node = doc.find(node_id)
        if node is None:
            raise UnknownNodeId(node_id)
        node_box = node_bbox(node)
        box = node_box if box is None else box.union(node_box)
    assert box is not None
    return box
