import json
import random
import re

import pytest

from css_grammar import CssSyntaxError, check_css
from decomate.codegen import (
    BUNDLE_FILENAMES,
    InvalidInput,
    emit_bundle,
    emit_keyframes,
    emit_preview_html,
    write_bundle,
)
from decomate.grouping import GroupSpec, GroupingSpec, apply_grouping, validate_and_complete
from decomate.motion import Easing, MotionSpec, Track, parse_motion_dsl
from decomate.svgdoc import flatten_and_assign_ids, parse_svg, serialize_svg


def flat_doc(n_leaves=4, width=40):
    body = "".join(
        f'<rect x="{i * 3}" y="0" width="2" height="2"/>' for i in range(n_leaves)
    )
    return flatten_and_assign_ids(parse_svg(f'<svg viewBox="0 0 {width} 10">{body}</svg>'))


def grouped(doc, *groups, object_name="thing"):
    spec, report = validate_and_complete(
        doc, GroupingSpec(object_name, tuple(GroupSpec(n, tuple(m)) for n, m in groups))
    )
    assert report.ok
    return apply_grouping(doc, spec), spec


class TestEmitKeyframes:
    def test_linear_translate_template(self):
        track = Track("body", "translateY", 0.0, -4.0, 1000, iterations=None,
                      direction="alternate")
        css = emit_keyframes(track)
        assert "@keyframes kf-body-translateY {" in css
        assert "0% { transform: translateY(0px); }" in css
        assert "100% { transform: translateY(-4px); }" in css

    def test_elastic_has_33_stops(self):
        track = Track("wing", "rotate", -15.0, 15.0, 800, easing=Easing.elastic_out())
        css = emit_keyframes(track)
        assert css.count("%") == 33
        assert "3.125% {" in css

    def test_steps_native_two_stops(self):
        track = Track("fade", "opacity", 0.0, 1.0, 500, easing=Easing.steps(4))
        css = emit_keyframes(track)
        assert css.count("{") == 3  # block + 2 stops
        assert "opacity: 0;" in css and "opacity: 1;" in css

    def test_custom_property_mode(self):
        track = Track("body", "rotate", 0.0, 9.0, 500)
        css = emit_keyframes(track, var_name="--body-rotate")
        assert "--body-rotate: 0deg;" in css
        assert "--body-rotate: 9deg;" in css


class TestEmitBundle:
    def test_empty_motion_static_bundle(self):
        doc = flat_doc(3)
        gdoc, spec = grouped(doc, ("all", ["el-0", "el-1", "el-2"]))
        bundle = emit_bundle(gdoc, MotionSpec(), spec)
        assert "@keyframes" not in bundle.css
        assert bundle.manifest["longest_duration_ms"] == 0
        assert bundle.manifest["groups"] == []
        assert serialize_svg(gdoc) in bundle.html

    def test_fragmented_group_shares_class_selector(self):
        doc = flat_doc(3)
        gdoc, spec = grouped(doc, ("wing", ["el-0", "el-2"]), ("body", ["el-1"]))
        motion = parse_motion_dsl(
            "anim wing: rotate from -10deg to 10deg dur 600 repeat infinite alternate", spec
        )
        bundle = emit_bundle(gdoc, motion, spec)
        assert 'id="wing-0"' in bundle.html and 'id="wing-1"' in bundle.html
        assert ".wing {" in bundle.css
        assert bundle.css.count("animation: kf-wing-rotate") == 1

    def test_two_transform_tracks_compose(self):
        doc = flat_doc(3)
        gdoc, spec = grouped(doc, ("body", ["el-0", "el-1", "el-2"]))
        motion = parse_motion_dsl(
            "anim body: translateY from 0px to -4px dur 1000\n"
            "anim body: rotate from 0deg to 6deg dur 1000",
            spec,
        )
        bundle = emit_bundle(gdoc, motion, spec)
        assert bundle.css.count("@keyframes") == 2
        assert (
            "transform: translateY(var(--body-translate)) rotate(var(--body-rotate));"
            in bundle.css
        )
        translate_pos = bundle.css.index("translateY(var")
        rotate_pos = bundle.css.index("rotate(var")
        assert translate_pos < rotate_pos

    def test_auto_origin_from_group_bbox(self):
        doc = flat_doc(2)  # rects at x=0..2 and 3..5, y=0..2
        gdoc, spec = grouped(doc, ("pair", ["el-0", "el-1"]))
        motion = parse_motion_dsl("anim pair: rotate from 0deg to 9deg dur 300", spec)
        bundle = emit_bundle(gdoc, motion, spec)
        assert "transform-box: view-box;" in bundle.css
        assert "transform-origin: 2.5px 1px;" in bundle.css

    def test_viewbox_offset_shifts_origin(self):
        doc = flatten_and_assign_ids(
            parse_svg('<svg viewBox="-10 -20 40 40"><rect x="0" y="0" width="2" height="2"/></svg>')
        )
        gdoc, spec = grouped(doc, ("a", ["el-0"]))
        motion = parse_motion_dsl("anim a: rotate from 0deg to 9deg dur 300", spec)
        bundle = emit_bundle(gdoc, motion, spec)
        assert "transform-origin: 11px 21px;" in bundle.css

    def test_explicit_origin_wins(self):
        doc = flat_doc(1)
        gdoc, spec = grouped(doc, ("a", ["el-0"]))
        motion = parse_motion_dsl("anim a: rotate from 0deg to 9deg dur 300 origin 7 8", spec)
        bundle = emit_bundle(gdoc, motion, spec)
        assert "transform-origin: 7px 8px;" in bundle.css

    def test_manifest_counts(self):
        doc = flat_doc(3)
        gdoc, spec = grouped(doc, ("a", ["el-0", "el-1"]), ("b", ["el-2"]))
        motion = parse_motion_dsl(
            "anim a: rotate from 0deg to 9deg dur 300\n"
            "anim a: opacity from 0.2 to 1 dur 900\n"
            "anim b: translateX from 0px to 5px dur 450",
            spec,
        )
        bundle = emit_bundle(gdoc, motion, spec)
        assert bundle.manifest == {
            "groups": ["a", "b"],
            "tracks_per_group": {"a": 2, "b": 1},
            "longest_duration_ms": 900,
        }

    def test_invalid_spec_rejected(self):
        doc = flat_doc(2)
        gdoc, spec = grouped(doc, ("a", ["el-0", "el-1"]))
        bad = MotionSpec((Track("ghost", "rotate", 0.0, 1.0, 300),))
        with pytest.raises(InvalidInput):
            emit_bundle(gdoc, bad, spec)

    def test_deterministic_bytes(self):
        doc = flat_doc(4)
        gdoc, spec = grouped(doc, ("a", ["el-0", "el-2"]), ("b", ["el-1", "el-3"]))
        motion = parse_motion_dsl(
            "anim a: rotate from -3deg to 3deg dur 700 ease elastic repeat infinite alternate\n"
            "anim b: opacity from 0 to 1 dur 500 ease steps(3)",
            spec,
        )
        first = emit_bundle(gdoc, motion, spec)
        second = emit_bundle(gdoc, motion, spec)
        assert (first.html, first.css, first.js, first.manifest) == (
            second.html, second.css, second.js, second.manifest,
        )

    def test_css_passes_grammar(self):
        doc = flat_doc(4)
        gdoc, spec = grouped(doc, ("a", ["el-0", "el-2"]), ("b", ["el-1", "el-3"]))
        motion = parse_motion_dsl(
            "anim a: rotate from -3deg to 3deg dur 700 ease elastic\n"
            "anim a: translateX from 0px to 2px dur 350\n"
            "anim b: opacity from 0 to 1 dur 500 ease cubic-bezier(0.42,0,0.58,1)",
            spec,
        )
        check_css(emit_bundle(gdoc, motion, spec).css)

    def test_grammar_checker_rejects_garbage(self):
        with pytest.raises(CssSyntaxError):
            check_css(".a { color }")
        with pytest.raises(CssSyntaxError):
            check_css("@keyframes 3bad { 0% { opacity: 0; } }")
        with pytest.raises(CssSyntaxError):
            check_css(".a { opacity: 1; ")


class TestPreviewHtml:
    def bundle(self):
        doc = flat_doc(2)
        gdoc, spec = grouped(doc, ("a", ["el-0", "el-1"]))
        motion = parse_motion_dsl("anim a: rotate from 0deg to 5deg dur 300", spec)
        return emit_bundle(gdoc, motion, spec)

    def test_single_style_and_script(self):
        html = emit_preview_html(self.bundle())
        assert html.count("<style>") == 1
        assert html.count("<script>") == 1
        assert "<link" not in html
        assert 'src="anim.js"' not in html

    def test_play_pause_scaffold_present(self):
        doc = flat_doc(1)
        gdoc, spec = grouped(doc, ("a", ["el-0"]))
        html = emit_preview_html(emit_bundle(gdoc, MotionSpec(), spec))
        assert 'id="play-toggle"' in html
        assert "play-toggle" in html

    def test_tags_balanced(self):
        html = emit_preview_html(self.bundle())
        void = {"meta", "link", "br", "img", "input", "hr"}
        stack = []
        for m in re.finditer(r"<(/?)([a-zA-Z][a-zA-Z0-9-]*)[^>]*?(/?)>", html):
            closing, tag, selfclosed = m.group(1), m.group(2).lower(), m.group(3)
            if selfclosed or tag in void or tag.startswith("!"):
                continue
            if closing:
                assert stack and stack[-1] == tag, f"unbalanced {tag} in preview html"
                stack.pop()
            else:
                stack.append(tag)
        assert stack == []


class TestWriteBundle:
    def test_file_set(self, tmp_path):
        doc = flat_doc(2)
        gdoc, spec = grouped(doc, ("a", ["el-0", "el-1"]))
        motion = parse_motion_dsl("anim a: rotate from 0deg to 5deg dur 300", spec)
        bundle = emit_bundle(gdoc, motion, spec)
        write_bundle(bundle, tmp_path)
        for name in BUNDLE_FILENAMES:
            assert (tmp_path / name).is_file()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest == bundle.manifest


def random_grouping_and_motion(rng, doc):
    """Seeded random pair for determinism sweeps (kind-unique per group)."""
    from decomate.motion import property_kind
    from decomate.svgdoc import leaf_sequence

    leaves = leaf_sequence(doc)
    names = ["alpha", "beta", "gamma", "delta"][: rng.randint(1, 4)]
    assignment = {leaf: rng.choice(names) for leaf in leaves}
    groups = []
    for name in names:
        members = tuple(l for l in leaves if assignment[l] == name)
        if members:
            groups.append(GroupSpec(name, members))
    spec, report = validate_and_complete(doc, GroupingSpec("rand", tuple(groups)))
    assert report.ok
    easings = [
        Easing(), Easing("ease-in-out"), Easing.elastic_out(), Easing("bounce-out"),
        Easing.steps(rng.randint(1, 6)), Easing.cubic_bezier(0.2, -0.3, 0.8, 1.2),
    ]
    tracks = []
    for g in spec.groups:
        kinds = rng.sample(["translate", "rotate", "scale", "opacity"], rng.randint(0, 4))
        for kind in kinds:
            prop = {
                "translate": rng.choice(["translateX", "translateY"]),
                "rotate": "rotate",
                "scale": rng.choice(["scale", "scaleX", "scaleY"]),
                "opacity": "opacity",
            }[kind]
            if prop == "opacity":
                lo, hi = sorted((round(rng.random(), 3), round(rng.random(), 3)))
            else:
                lo, hi = round(rng.uniform(-30, 30), 2), round(rng.uniform(-30, 30), 2)
            tracks.append(
                Track(
                    group=g.name, property=prop, from_value=lo, to_value=hi,
                    duration_ms=rng.randint(16, 4000), delay_ms=rng.randint(0, 500),
                    iterations=rng.choice([1, 2, 7, None]),
                    direction=rng.choice(["normal", "alternate"]),
                    easing=rng.choice(easings),
                )
            )
    assert property_kind  # imported for clarity
    return spec, MotionSpec(tuple(tracks))


class TestRandomizedDeterminism:
    def test_repeat_emission_byte_identical(self):
        rng = random.Random(2024)
        doc = flat_doc(8, width=60)
        for _ in range(10):
            spec, motion = random_grouping_and_motion(rng, doc)
            gdoc = apply_grouping(doc, spec)
            a = emit_bundle(gdoc, motion, spec)
            b = emit_bundle(gdoc, motion, spec)
            assert (a.html, a.css, a.js) == (b.html, b.css, b.js)
            check_css(a.css)
