"""Semantic groupings over a flattened document.

A grouping partitions the document's leaf entries into named parts. Applying
one never reorders paint: each maximal run of consecutive same-group leaves
becomes one wrapper fragment, so non-contiguous groups turn into several
fragments sharing a class instead of moving elements.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

from .svgdoc import SvgDocument, SvgNode, leaf_sequence

__all__ = [
    "GroupSpec",
    "GroupingSpec",
    "InvalidSpec",
    "Issue",
    "NameCollision",
    "RefinementEdit",
    "UnknownGroup",
    "UnknownMember",
    "ValidationReport",
    "apply_grouping",
    "apply_refinement",
    "slugify",
    "validate_and_complete",
]

REST_GROUP = "rest"

_SLUG_OK = re.compile(r"^[a-z0-9-]+$")


def slugify(name: str) -> str:
    """Lowercase, non-alphanumerics to hyphens, hyphens collapsed."""
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug


@dataclass(frozen=True)
class GroupSpec:
    name: str
    members: tuple[str, ...]
    suggestions: tuple[str, ...] = ()

    def to_wire(self) -> dict:
        return {
            "name": self.name,
            "members": list(self.members),
            "suggestions": list(self.suggestions),
        }


@dataclass(frozen=True)
class GroupingSpec:
    object_name: str
    groups: tuple[GroupSpec, ...]

    def group(self, name: str) -> GroupSpec | None:
        for g in self.groups:
            if g.name == name:
                return g
        return None

    def names(self) -> list[str]:
        return [g.name for g in self.groups]

    def to_wire(self) -> dict:
        return {
            "object": self.object_name,
            "groups": [g.to_wire() for g in self.groups],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_wire(), indent=2) + "\n"

    @classmethod
    def from_wire(cls, data: dict) -> "GroupingSpec":
        groups = tuple(
            GroupSpec(
                name=str(g["name"]),
                members=tuple(str(m) for m in g.get("members", [])),
                suggestions=tuple(str(s) for s in g.get("suggestions", [])),
            )
            for g in data.get("groups", [])
        )
        return cls(object_name=str(data.get("object", "")), groups=groups)


@dataclass(frozen=True)
class Issue:
    code: str
    subject: str
    message: str
    severity: str = "error"  # "error" | "warning"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    def to_wire(self) -> dict:
        return {
            "ok": self.ok,
            "issues": [
                {
                    "code": i.code,
                    "subject": i.subject,
                    "message": i.message,
                    "severity": i.severity,
                }
                for i in self.issues
            ],
        }


class InvalidSpec(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("grouping spec is not a valid partition")
        self.report = report


class UnknownGroup(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.group = name


class UnknownMember(KeyError):
    def __init__(self, member: str):
        super().__init__(member)
        self.member = member


class NameCollision(ValueError):
    def __init__(self, name: str):
        super().__init__(f"group name already exists: {name}")
        self.group = name


def validate_and_complete(
    doc: SvgDocument, spec: GroupingSpec
) -> tuple[GroupingSpec, ValidationReport]:
    """Normalize names, flag duplicate/unknown members, append a "rest" group
    for uncovered leaves so the result partitions the document."""
    leaves = leaf_sequence(doc)
    leaf_set = set(leaves)
    issues: list[Issue] = []
    seen_names: set[str] = set()
    seen_members: set[str] = set()
    groups: list[GroupSpec] = []

    for g in spec.groups:
        name = g.name if _SLUG_OK.match(g.name) else slugify(g.name)
        if name != g.name:
            if not name:
                issues.append(Issue("EmptyName", g.name, "group name slugs to nothing"))
                continue
            issues.append(
                Issue("RenamedGroup", g.name, f"normalized to {name!r}", "warning")
            )
        if name == REST_GROUP:
            issues.append(Issue("ReservedName", name, 'group name "rest" is reserved'))
            continue
        if name in seen_names:
            k = 2
            while f"{name}-{k}" in seen_names:
                k += 1
            issues.append(
                Issue("RenamedGroup", name, f"collision, renamed to {name}-{k}", "warning")
            )
            name = f"{name}-{k}"
        seen_names.add(name)
        members = []
        for m in g.members:
            if m not in leaf_set:
                issues.append(Issue("UnknownNodeId", m, f"no leaf with id {m!r}"))
                continue
            if m in seen_members:
                issues.append(Issue("DuplicateMember", m, f"{m!r} appears in two groups"))
                continue
            seen_members.add(m)
            members.append(m)
        if not members:
            issues.append(Issue("EmptyGroup", name, "group has no valid members"))
            continue
        groups.append(GroupSpec(name, tuple(members), g.suggestions))

    uncovered = [m for m in leaves if m not in seen_members]
    if uncovered:
        groups.append(GroupSpec(REST_GROUP, tuple(uncovered)))
        issues.append(
            Issue(
                "UncoveredLeaves",
                REST_GROUP,
                f"{len(uncovered)} leaves collected into \"rest\"",
                "warning",
            )
        )

    return GroupingSpec(spec.object_name, tuple(groups)), ValidationReport(tuple(issues))


def _partition_check(doc: SvgDocument, spec: GroupingSpec) -> ValidationReport:
    leaves = leaf_sequence(doc)
    issues = []
    membership: dict[str, str] = {}
    for g in spec.groups:
        for m in g.members:
            if m in membership:
                issues.append(Issue("DuplicateMember", m, "member in two groups"))
            membership[m] = g.name
    for leaf in leaves:
        if leaf not in membership:
            issues.append(Issue("UncoveredLeaf", leaf, "leaf not in any group"))
    for m in membership:
        if m not in set(leaves):
            issues.append(Issue("UnknownNodeId", m, "member is not a document leaf"))
    return ValidationReport(tuple(issues))


def apply_grouping(doc: SvgDocument, spec: GroupingSpec) -> SvgDocument:
    """Wrap leaves in fragment groups without changing paint order.

    Fragment ids are "<name>-<k>" with k counting the group's fragments;
    every fragment carries class "<name>" so one selector reaches all of
    them. Leaf attributes are untouched.
    """
    report = _partition_check(doc, spec)
    if not report.ok:
        raise InvalidSpec(report)

    group_of = {m: g.name for g in spec.groups for m in g.members}
    fragment_count: dict[str, int] = {}
    wrapped: list[SvgNode] = []
    run: list[SvgNode] = []
    run_group: str | None = None

    def flush():
        nonlocal run, run_group
        if not run:
            return
        k = fragment_count.get(run_group, 0)
        fragment_count[run_group] = k + 1
        wrapped.append(
            SvgNode(
                kind="group",
                attrs={"id": f"{run_group}-{k}", "class": run_group},
                children=run,
            )
        )
        run = []
        run_group = None

    for leaf in doc.leaf_entries():
        name = group_of[leaf.attrs["id"]]
        if name != run_group:
            flush()
            run_group = name
        run.append(leaf.clone())
    flush()

    return SvgDocument(
        view_box=doc.view_box,
        defs=[d.clone() for d in doc.defs],
        root_children=wrapped,
        source_hash=doc.source_hash,
        root_attrs=dict(doc.root_attrs),
    )


@dataclass(frozen=True)
class RefinementEdit:
    """One structural edit: split/merge/move/rename.

    split: source group -> parts [(name, members), ...] covering it exactly.
    merge: source group absorbed into target.
    move: members moved to target group (created if missing).
    rename: source renamed to new_name.
    """

    op: str
    source: str = ""
    target: str = ""
    new_name: str = ""
    members: tuple[str, ...] = ()
    parts: tuple[tuple[str, tuple[str, ...]], ...] = ()


def _apply_one(spec: GroupingSpec, edit: RefinementEdit) -> GroupingSpec:
    groups = list(spec.groups)
    names = {g.name for g in groups}

    def index_of(name: str) -> int:
        for i, g in enumerate(groups):
            if g.name == name:
                return i
        raise UnknownGroup(name)

    if edit.op == "rename":
        i = index_of(edit.source)
        if edit.new_name in names:
            raise NameCollision(edit.new_name)
        groups[i] = replace(groups[i], name=edit.new_name)
    elif edit.op == "merge":
        i = index_of(edit.source)
        j = index_of(edit.target)
        groups[j] = replace(
            groups[j], members=groups[j].members + groups[i].members
        )
        del groups[i]
    elif edit.op == "move":
        moved = set(edit.members)
        owners = {m: g.name for g in groups for m in g.members}
        for m in edit.members:
            if m not in owners:
                raise UnknownMember(m)
        if edit.target not in names:
            groups.append(GroupSpec(edit.target, tuple(edit.members)))
        rebuilt = []
        for g in groups:
            if g.name == edit.target:
                kept = tuple(m for m in g.members if m not in moved)
                rebuilt.append(replace(g, members=kept + tuple(edit.members)))
            else:
                kept = tuple(m for m in g.members if m not in moved)
                if kept:
                    rebuilt.append(replace(g, members=kept))
        groups = rebuilt
    elif edit.op == "split":
        i = index_of(edit.source)
        source = groups[i]
        part_members = [m for _, ms in edit.parts for m in ms]
        if sorted(part_members) != sorted(source.members):
            missing = set(source.members) ^ set(part_members)
            raise UnknownMember(next(iter(missing)))
        for name, _ in edit.parts:
            if name in names and name != source.name:
                raise NameCollision(name)
        replacement = [
            GroupSpec(name, tuple(ms), source.suggestions) for name, ms in edit.parts
        ]
        groups[i : i + 1] = replacement
    else:
        raise ValueError(f"unknown refinement op {edit.op!r}")
    return GroupingSpec(spec.object_name, tuple(groups))


def apply_refinement(
    spec: GroupingSpec,
    edits: list[RefinementEdit],
    doc: SvgDocument | None = None,
) -> GroupingSpec:
    """Apply edits in order; membership multiset is conserved.

    When `doc` is given the result is re-validated against it and must stay
    a partition.
    """
    out = spec
    for edit in edits:
        out = _apply_one(out, edit)
    if doc is not None:
        report = _partition_check(doc, out)
        if not report.ok:
            raise InvalidSpec(report)
    return out
