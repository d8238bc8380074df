"""Compile a grouped document plus motion spec into an HTML/CSS/JS bundle.

Everything becomes CSS keyframes: native easings pass through as
animation-timing-function, sampled easings become 33 linear stops. The JS is
confined to play/pause and reduced-motion handling; there is no runtime
animation engine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .geometry import fmt_number, group_bbox
from .grouping import GroupingSpec
from .motion import MotionSpec, Track, expand_track_keyframes, validate_motion
from .svgdoc import SvgDocument, serialize_svg

__all__ = [
    "AnimationBundle",
    "BUNDLE_FILENAMES",
    "InvalidInput",
    "emit_bundle",
    "emit_keyframes",
    "emit_preview_html",
    "write_bundle",
]

SAMPLED_KEYFRAME_COUNT = 33
_KIND_ORDER = ("translate", "rotate", "scale", "opacity")

BUNDLE_FILENAMES = ("index.html", "style.css", "anim.js", "manifest.json")

_LINK_TAG = '<link rel="stylesheet" href="style.css"/>'
_SCRIPT_TAG = '<script src="anim.js"></script>'

_PROPERTY_SYNTAX = {
    "translate": ("<length>", "0px"),
    "rotate": ("<angle>", "0deg"),
    "scale": ("<number>", "1"),
}


class InvalidInput(ValueError):
    pass


@dataclass(frozen=True)
class AnimationBundle:
    html: str
    css: str
    js: str
    manifest: dict


def _value_text(t: Track, value: float) -> str:
    return fmt_number(value) + t.unit


def _keyframes_name(t: Track) -> str:
    return f"kf-{t.group}-{t.property}"


def _custom_property(t: Track) -> str:
    return f"--{t.group}-{t.kind}"


def emit_keyframes(t: Track, var_name: str | None = None) -> str:
    """One @keyframes block for a track.

    Native easings get two stops (the timing function carries the curve);
    sampled easings get 33 stops with linear timing between them. When
    `var_name` is given the block animates that custom property instead of
    transform/opacity directly.
    """
    if t.easing.is_css_native():
        stops = [(0.0, t.from_value), (1.0, t.to_value)]
    else:
        stops = [(kf.offset, kf.value) for kf in expand_track_keyframes(t, SAMPLED_KEYFRAME_COUNT)]
    lines = [f"@keyframes {_keyframes_name(t)} {{"]
    for offset, value in stops:
        text = _value_text(t, value)
        if var_name is not None:
            decl = f"{var_name}: {text}"
        elif t.property == "opacity":
            decl = f"opacity: {text}"
        else:
            decl = f"transform: {t.property}({text})"
        lines.append(f"  {fmt_number(offset * 100)}% {{ {decl}; }}")
    lines.append("}")
    return "\n".join(lines)


def _animation_shorthand(t: Track) -> str:
    timing = t.easing.css_timing_function() if t.easing.is_css_native() else "linear"
    iterations = "infinite" if t.iterations is None else str(t.iterations)
    return (
        f"{_keyframes_name(t)} {t.duration_ms}ms {timing} "
        f"{t.delay_ms}ms {iterations} {t.direction}"
    )


def _sorted_group_tracks(spec: MotionSpec, group: str) -> list[Track]:
    tracks = spec.tracks_for(group)
    return sorted(tracks, key=lambda t: _KIND_ORDER.index(t.kind))


def _resolve_origin(
    doc: SvgDocument, grouping: GroupingSpec, group: str, tracks: list[Track]
) -> tuple[float, float] | None:
    pivots = [t for t in tracks if t.kind in ("rotate", "scale")]
    if not pivots:
        return None
    explicit = {t.origin for t in pivots if isinstance(t.origin, tuple)}
    if len(explicit) > 1:
        raise InvalidInput(f"conflicting explicit origins on group {group!r}")
    if explicit:
        x, y = next(iter(explicit))
    else:
        members = grouping.group(group)
        assert members is not None
        x, y = group_bbox(doc, list(members.members)).center
    vb = doc.view_box
    # transform-box: view-box measures lengths from the viewport corner.
    return (x - vb.min_x, y - vb.min_y)


def _group_rule(
    doc: SvgDocument, grouping: GroupingSpec, group: str, tracks: list[Track]
) -> str:
    lines = [f".{group} {{"]
    origin = _resolve_origin(doc, grouping, group, tracks)
    if origin is not None:
        lines.append("  transform-box: view-box;")
        lines.append(f"  transform-origin: {fmt_number(origin[0])}px {fmt_number(origin[1])}px;")
    transform_tracks = [t for t in tracks if t.kind != "opacity"]
    if len(transform_tracks) > 1:
        fns = " ".join(
            f"{t.property}(var({_custom_property(t)}))" for t in transform_tracks
        )
        lines.append(f"  transform: {fns};")
    shorthand = ", ".join(_animation_shorthand(t) for t in tracks)
    lines.append(f"  animation: {shorthand};")
    lines.append("}")
    return "\n".join(lines)


def _register_property_block(t: Track) -> str:
    syntax, initial = _PROPERTY_SYNTAX[t.kind]
    return "\n".join(
        [
            f"@property {_custom_property(t)} {{",
            f'  syntax: "{syntax}";',
            "  inherits: false;",
            f"  initial-value: {initial};",
            "}",
        ]
    )


def _emit_css(doc: SvgDocument, spec: MotionSpec, grouping: GroupingSpec) -> str:
    parts: list[str] = []
    animated = [g.name for g in grouping.groups if spec.tracks_for(g.name)]
    for group in animated:
        tracks = _sorted_group_tracks(spec, group)
        transform_tracks = [t for t in tracks if t.kind != "opacity"]
        composed = len(transform_tracks) > 1
        if composed:
            for t in transform_tracks:
                parts.append(_register_property_block(t))
        for t in tracks:
            if composed and t.kind != "opacity":
                parts.append(emit_keyframes(t, var_name=_custom_property(t)))
            else:
                parts.append(emit_keyframes(t))
        parts.append(_group_rule(doc, grouping, group, tracks))
    parts.append(
        "\n".join(
            [
                "@media (prefers-reduced-motion: reduce) {",
                "  .stage * { animation-play-state: paused !important; }",
                "}",
            ]
        )
    )
    parts.append(".stage.paused * { animation-play-state: paused !important; }")
    return "\n\n".join(parts) + "\n"


def _escape_html_text(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _emit_html(svg_text: str, title: str) -> str:
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n'
        "<head>\n"
        '<meta charset="utf-8"/>\n'
        f"<title>{_escape_html_text(title)}</title>\n"
        f"{_LINK_TAG}\n"
        "</head>\n"
        "<body>\n"
        '<main class="stage">\n'
        f"{svg_text}"
        "</main>\n"
        '<button id="play-toggle" type="button">Pause</button>\n'
        f"{_SCRIPT_TAG}\n"
        "</body>\n"
        "</html>\n"
    )


_JS = """\
(function () {
  "use strict";
  var stage = document.querySelector(".stage");
  var toggle = document.getElementById("play-toggle");
  if (!stage || !toggle) {
    return;
  }
  function setPaused(paused) {
    stage.classList.toggle("paused", paused);
    toggle.textContent = paused ? "Play" : "Pause";
  }
  toggle.addEventListener("click", function () {
    setPaused(!stage.classList.contains("paused"));
  });
  setPaused(window.matchMedia("(prefers-reduced-motion: reduce)").matches);
})();
"""


def emit_bundle(doc: SvgDocument, spec: MotionSpec, grouping: GroupingSpec) -> AnimationBundle:
    """Deterministic bundle for a grouped document and validated motion spec.

    Selectors target group classes, so every fragment of a group picks up the
    same animation; rotate/scale pivots come from group bboxes in user space.
    """
    report = validate_motion(spec, grouping)
    if not report.ok:
        raise InvalidInput(f"motion spec invalid: {[i.code for i in report.errors()]}")
    present_classes = {c.attrs.get("class") for c in doc.root_children}
    for t in spec.tracks:
        if t.group not in present_classes:
            raise InvalidInput(f"document has no fragments for group {t.group!r}")

    animated = [g.name for g in grouping.groups if spec.tracks_for(g.name)]
    manifest = {
        "groups": animated,
        "tracks_per_group": {g: len(spec.tracks_for(g)) for g in animated},
        "longest_duration_ms": max((t.duration_ms for t in spec.tracks), default=0),
    }
    svg_text = serialize_svg(doc)
    title = grouping.object_name or "animation"
    return AnimationBundle(
        html=_emit_html(svg_text, title),
        css=_emit_css(doc, spec, grouping),
        js=_JS,
        manifest=manifest,
    )


def emit_preview_html(bundle: AnimationBundle) -> str:
    """Self-contained preview document: css and js inlined, no external refs."""
    html = bundle.html.replace(_LINK_TAG, "<style>\n" + bundle.css + "</style>")
    html = html.replace(_SCRIPT_TAG, "<script>\n" + bundle.js + "</script>")
    return html


def write_bundle(bundle: AnimationBundle, outdir: str | Path) -> list[Path]:
    """Write index.html, style.css, anim.js, manifest.json into outdir."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    contents = {
        "index.html": bundle.html,
        "style.css": bundle.css,
        "anim.js": bundle.js,
        "manifest.json": json.dumps(bundle.manifest, indent=2, sort_keys=True) + "\n",
    }
    written = []
    for name in BUNDLE_FILENAMES:
        path = out / name
        path.write_text(contents[name], encoding="utf-8")
        written.append(path)
    return written
