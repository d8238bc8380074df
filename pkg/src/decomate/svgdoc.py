"""Canonical SVG document tree: parse, flatten, serialize.

The model deliberately covers a documented subset: shapes, paths, groups,
text (character data only), images, use-references into defs, and defs
carrying gradients/clipPaths/filters verbatim. Parsing normalizes structure;
flattening dissolves syntactic groups so every leaf carries its full visual
state, which is what makes semantic regrouping rendering-safe.
"""

from __future__ import annotations

import hashlib
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

from .geometry import Affine2D, Rect, TransformParseError, fmt_number_exact, parse_transform_list

__all__ = [
    "EmptyDocument",
    "MalformedXml",
    "MissingReference",
    "SvgDocument",
    "SvgNode",
    "SvgParseError",
    "UnsupportedFeature",
    "flatten_and_assign_ids",
    "leaf_sequence",
    "parse_svg",
    "serialize_svg",
]

SVG_NS = "http://www.w3.org/2000/svg"
XLINK_NS = "http://www.w3.org/1999/xlink"

LEAF_KINDS = frozenset(
    {"path", "rect", "circle", "ellipse", "line", "polyline", "polygon", "text", "image", "use"}
)
_DEF_KINDS = frozenset(
    {"linearGradient", "radialGradient", "clipPath", "filter", "pattern", "mask", "symbol", "marker"}
)
_REJECTED = frozenset(
    {
        "script",
        "animate",
        "animateTransform",
        "animateMotion",
        "animateColor",
        "set",
        "foreignObject",
        "style",
    }
)
_SKIPPED = frozenset({"title", "desc", "metadata"})

# Presentation attributes copied from a dissolved group onto children that
# lack them. `opacity` is intentionally absent: it is a group effect, not an
# inherited property, and makes the group atomic instead.
INHERITABLE_ATTRS = (
    "fill",
    "fill-opacity",
    "fill-rule",
    "stroke",
    "stroke-width",
    "stroke-opacity",
    "stroke-linecap",
    "stroke-linejoin",
    "stroke-miterlimit",
    "stroke-dasharray",
    "stroke-dashoffset",
    "color",
    "font-family",
    "font-size",
    "font-style",
    "font-weight",
    "text-anchor",
    "visibility",
)

# A group carrying any of these cannot be dissolved without changing
# rendering, so it is kept intact as an atomic leaf.
_ATOMIC_GROUP_ATTRS = ("style", "clip-path", "mask", "filter")


class SvgParseError(ValueError):
    pass


class MalformedXml(SvgParseError):
    def __init__(self, position, message: str):
        super().__init__(f"malformed svg at {position}: {message}")
        self.position = position


class UnsupportedFeature(SvgParseError):
    def __init__(self, feature: str):
        super().__init__(f"unsupported svg feature: {feature}")
        self.feature = feature


class EmptyDocument(SvgParseError):
    def __init__(self):
        super().__init__("empty document")


class MissingReference(SvgParseError):
    def __init__(self, ref: str):
        super().__init__(f"reference does not resolve: #{ref}")
        self.ref = ref


@dataclass
class SvgNode:
    """One element. `transform` is structured for body nodes; defs subtrees
    keep every attribute (including transform) verbatim in `attrs`."""

    kind: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["SvgNode"] = field(default_factory=list)
    transform: Affine2D | None = None
    atomic: bool = False
    text: str | None = None

    @property
    def node_id(self) -> str | None:
        return self.attrs.get("id")

    def is_leaf_entry(self) -> bool:
        """True for nodes that count as visual leaves (shape leaves and
        atomic groups)."""
        return self.kind != "group" or self.atomic

    def clone(self) -> "SvgNode":
        return SvgNode(
            kind=self.kind,
            attrs=dict(self.attrs),
            children=[c.clone() for c in self.children],
            transform=self.transform,
            atomic=self.atomic,
            text=self.text,
        )


@dataclass
class SvgDocument:
    view_box: Rect
    defs: list[SvgNode]
    root_children: list[SvgNode]
    source_hash: str
    root_attrs: dict[str, str] = field(default_factory=dict)

    def def_ids(self) -> set[str]:
        return {n.attrs["id"] for n in self.defs if "id" in n.attrs}

    def iter_body(self):
        """Depth-first pre-order walk of body nodes (paint order)."""
        stack = list(reversed(self.root_children))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def find(self, node_id: str) -> SvgNode | None:
        for node in self.iter_body():
            if node.attrs.get("id") == node_id:
                return node
        return None

    def leaf_entries(self) -> list[SvgNode]:
        """Leaves and atomic groups in paint order; does not descend into
        atomic groups."""
        out: list[SvgNode] = []

        def walk(nodes):
            for node in nodes:
                if node.is_leaf_entry():
                    out.append(node)
                else:
                    walk(node.children)

        walk(self.root_children)
        return out

    def structurally_equal(self, other: "SvgDocument") -> bool:
        """Equality over structure and content, ignoring the source hash."""
        return (
            self.view_box == other.view_box
            and self.defs == other.defs
            and self.root_children == other.root_children
            and self.root_attrs == other.root_attrs
        )


_URL_REF = re.compile(r"url\(\s*['\"]?#([^)'\"\s]+)['\"]?\s*\)")
_WS = re.compile(r"[\s,]+")


def _strip_ns(tag: str) -> tuple[str, str]:
    """Split '{ns}tag' into (ns, tag); no-namespace tags get ns ''. """
    if tag.startswith("{"):
        ns, _, local = tag[1:].partition("}")
        return ns, local
    return "", tag


def _convert_attrs(elem: ET.Element) -> dict[str, str]:
    """Keep no-namespace and xlink:href attributes; drop other foreign ones."""
    out: dict[str, str] = {}
    for name, value in elem.attrib.items():
        ns, local = _strip_ns(name)
        if ns == "":
            out[local] = value
        elif ns == XLINK_NS and local == "href":
            out["xlink:href"] = value
    return out


def _group_is_atomic(attrs: dict[str, str]) -> bool:
    if any(a in attrs for a in _ATOMIC_GROUP_ATTRS):
        return True
    raw = attrs.get("opacity")
    if raw is None:
        return False
    raw = raw.strip()
    try:
        value = float(raw[:-1]) / 100 if raw.endswith("%") else float(raw)
    except ValueError:
        return True
    return value < 1.0


def _parse_verbatim(elem: ET.Element, kind: str) -> SvgNode:
    """Defs subtree: keep attributes and children exactly as written."""
    node = SvgNode(kind=kind, attrs=_convert_attrs(elem))
    if elem.text and elem.text.strip():
        node.text = elem.text.strip()
    for child in elem:
        ns, tag = _strip_ns(child.tag)
        if ns not in ("", SVG_NS):
            continue
        if tag in _REJECTED:
            raise UnsupportedFeature(tag)
        node.children.append(_parse_verbatim(child, tag))
    return node


def _parse_body_transform(attrs: dict[str, str]) -> Affine2D | None:
    raw = attrs.pop("transform", None)
    if raw is None:
        return None
    try:
        xf = parse_transform_list(raw)
    except TransformParseError as exc:
        raise MalformedXml(exc.position, f"bad transform list: {raw!r}") from exc
    return None if xf.is_identity() else xf


def _parse_body(elem: ET.Element, defs: list[SvgNode]) -> SvgNode | None:
    ns, tag = _strip_ns(elem.tag)
    if ns not in ("", SVG_NS):
        return None  # editor metadata in foreign namespaces
    if tag in _REJECTED:
        raise UnsupportedFeature(tag)
    if tag in _SKIPPED:
        return None
    if tag == "defs":
        for child in elem:
            entry = _parse_def_entry(child)
            if entry is not None:
                defs.append(entry)
        return None
    if tag in _DEF_KINDS:
        entry = _parse_def_entry(elem)
        if entry is not None:
            defs.append(entry)
        return None
    if tag == "g":
        attrs = _convert_attrs(elem)
        node = SvgNode(kind="group", attrs=attrs)
        node.transform = _parse_body_transform(node.attrs)
        node.atomic = _group_is_atomic(node.attrs)
        for child in elem:
            parsed = _parse_body(child, defs)
            if parsed is not None:
                node.children.append(parsed)
        return node
    if tag in LEAF_KINDS:
        node = SvgNode(kind=tag, attrs=_convert_attrs(elem))
        node.transform = _parse_body_transform(node.attrs)
        if tag == "text":
            if len(elem) > 0:
                raise UnsupportedFeature(_strip_ns(elem[0].tag)[1])
            node.text = elem.text or ""
        elif len(elem) > 0:
            raise UnsupportedFeature(f"children of <{tag}>")
        return node
    raise UnsupportedFeature(tag)


def _parse_def_entry(elem: ET.Element) -> SvgNode | None:
    ns, tag = _strip_ns(elem.tag)
    if ns not in ("", SVG_NS):
        return None
    if tag in _REJECTED:
        raise UnsupportedFeature(tag)
    if tag in _SKIPPED:
        return None
    node = _parse_verbatim(elem, tag)
    # Unreferenceable entries are dead content; defs are keyed by id.
    if "id" not in node.attrs:
        return None
    return node


def _parse_view_box(attrs: dict[str, str]) -> Rect:
    raw = attrs.pop("viewBox", None)
    if raw is not None:
        parts = _WS.split(raw.strip())
        if len(parts) != 4:
            raise MalformedXml(0, f"viewBox needs 4 numbers: {raw!r}")
        try:
            mx, my, w, h = (float(p) for p in parts)
        except ValueError as exc:
            raise MalformedXml(0, f"bad viewBox: {raw!r}") from exc
        if w < 0 or h < 0:
            raise MalformedXml(0, f"negative viewBox extent: {raw!r}")
        return Rect(mx, my, mx + w, my + h)
    try:
        w = float(attrs.get("width", "").rstrip("px") or "nan")
        h = float(attrs.get("height", "").rstrip("px") or "nan")
        if w == w and h == h:  # not NaN
            return Rect(0, 0, w, h)
    except ValueError:
        pass
    return Rect(0, 0, 100, 100)


def _validate_references(doc: SvgDocument):
    ids = doc.def_ids()

    def check_attrs(node: SvgNode):
        for name, value in node.attrs.items():
            for ref in _URL_REF.findall(value):
                if ref not in ids:
                    raise MissingReference(ref)
            if name in ("href", "xlink:href") and value.startswith("#"):
                if value[1:] not in ids:
                    raise MissingReference(value[1:])

    for node in doc.iter_body():
        if node.kind == "use":
            href = node.attrs.get("href") or node.attrs.get("xlink:href") or ""
            if not href.startswith("#"):
                raise UnsupportedFeature("use without local href")
        check_attrs(node)
    stack = list(doc.defs)
    while stack:
        node = stack.pop()
        check_attrs(node)
        stack.extend(node.children)


def parse_svg(text: str) -> SvgDocument:
    """Parse SVG text into the canonical document model.

    Rejects script/animation/foreignObject content; preserves unknown but
    harmless attributes verbatim; drops non-rendering editor metadata.
    """
    if not text or not text.strip():
        raise EmptyDocument()
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedXml(exc.position, str(exc)) from exc
    ns, tag = _strip_ns(root.tag)
    if tag != "svg" or ns not in ("", SVG_NS):
        raise UnsupportedFeature(f"root element <{tag}>")

    root_attrs = _convert_attrs(root)
    view_box = _parse_view_box(root_attrs)
    defs: list[SvgNode] = []
    children: list[SvgNode] = []
    for child in root:
        parsed = _parse_body(child, defs)
        if parsed is not None:
            children.append(parsed)

    doc = SvgDocument(
        view_box=view_box,
        defs=defs,
        root_children=children,
        source_hash=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        root_attrs=root_attrs,
    )
    _validate_references(doc)
    return doc


def _merge_inherited(attrs: dict[str, str], inherited: dict[str, str]) -> dict[str, str]:
    merged = dict(attrs)
    for name in INHERITABLE_ATTRS:
        if name in inherited and name not in merged:
            merged[name] = inherited[name]
    return merged


def flatten_and_assign_ids(doc: SvgDocument) -> SvgDocument:
    """Dissolve non-atomic groups and assign paint-order NodeIds.

    Group transforms compose onto children; inheritable presentation
    attributes copy onto children that lack them; atomic groups (opacity < 1,
    style/clip-path/mask/filter) survive intact as single leaves. Leaf ids
    become "el-<paint index>"; pre-existing ids move to data-orig-id.
    """
    entries: list[SvgNode] = []

    def walk(node: SvgNode, xf: Affine2D, inherited: dict[str, str]):
        own = xf if node.transform is None else xf.compose(node.transform)
        if node.kind == "group" and not node.atomic:
            inh = dict(inherited)
            for name in INHERITABLE_ATTRS:
                # Nearer declarations shadow outer ones.
                if name in node.attrs:
                    inh[name] = node.attrs[name]
            for child in node.children:
                walk(child, own, inh)
            return
        out = node.clone()
        out.attrs = _merge_inherited(out.attrs, inherited)
        out.transform = None if own.is_identity() else own
        if node.kind == "group":
            out.atomic = True
        entries.append(out)

    for child in doc.root_children:
        walk(child, Affine2D(), {})

    for index, node in enumerate(entries):
        assigned = f"el-{index}"
        previous = node.attrs.get("id")
        attrs = {"id": assigned}
        attrs.update((k, v) for k, v in node.attrs.items() if k != "id")
        if previous and previous != assigned and "data-orig-id" not in attrs:
            attrs["data-orig-id"] = previous
        node.attrs = attrs

    return SvgDocument(
        view_box=doc.view_box,
        defs=[d.clone() for d in doc.defs],
        root_children=entries,
        source_hash=doc.source_hash,
        root_attrs=dict(doc.root_attrs),
    )


def leaf_sequence(doc: SvgDocument) -> list[str]:
    """NodeIds of leaves and atomic groups in paint order."""
    out = []
    for node in doc.leaf_entries():
        node_id = node.attrs.get("id")
        if node_id is None:
            raise ValueError(f"leaf of kind {node.kind!r} has no assigned id")
        out.append(node_id)
    return out


def _escape_attr(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _escape_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _tag_for(node: SvgNode) -> str:
    return "g" if node.kind == "group" else node.kind


def _write_node(node: SvgNode, indent: int, out: list[str]):
    pad = "  " * indent
    tag = _tag_for(node)
    parts = [f"{pad}<{tag}"]
    for name, value in node.attrs.items():
        parts.append(f' {name}="{_escape_attr(value)}"')
    if node.transform is not None and not node.transform.is_identity():
        parts.append(f' transform="{_escape_attr(node.transform.to_svg())}"')
    open_tag = "".join(parts)
    if node.children:
        out.append(open_tag + ">")
        if node.text:
            out.append("  " * (indent + 1) + _escape_text(node.text))
        for child in node.children:
            _write_node(child, indent + 1, out)
        out.append(f"{pad}</{tag}>")
    elif node.text is not None:
        out.append(f"{open_tag}>{_escape_text(node.text)}</{tag}>")
    else:
        out.append(open_tag + "/>")


def _uses_xlink(doc: SvgDocument) -> bool:
    def node_uses(node: SvgNode) -> bool:
        return "xlink:href" in node.attrs or any(node_uses(c) for c in node.children)

    return any(node_uses(n) for n in doc.root_children) or any(
        node_uses(n) for n in doc.defs
    )


def serialize_svg(doc: SvgDocument) -> str:
    """Deterministic canonical serialization; NodeIds emit as id attributes."""
    vb = doc.view_box
    view_box = " ".join(
        fmt_number_exact(v) for v in (vb.min_x, vb.min_y, vb.width, vb.height)
    )
    head = [f'<svg xmlns="{SVG_NS}"']
    if _uses_xlink(doc):
        head.append(f' xmlns:xlink="{XLINK_NS}"')
    head.append(f' viewBox="{view_box}"')
    for name, value in doc.root_attrs.items():
        head.append(f' {name}="{_escape_attr(value)}"')
    head.append(">")
    lines = ["".join(head)]
    if doc.defs:
        lines.append("  <defs>")
        for entry in doc.defs:
            _write_node(entry, 2, lines)
        lines.append("  </defs>")
    for child in doc.root_children:
        _write_node(child, 1, lines)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
