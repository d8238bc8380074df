import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decomate.geometry import (
    Affine2D,
    EmptyGroup,
    PathParseError,
    Rect,
    TransformParseError,
    fmt_number,
    group_bbox,
    parse_path_data,
    parse_transform_list,
    path_bbox,
)
from decomate.svgdoc import flatten_and_assign_ids, parse_svg


def sample_path(path, per_segment=200):
    """Points along every cubic, uniform in t (oracle helper)."""
    pts = []
    for sp in path.subpaths:
        x0, y0 = sp.start
        pts.append((x0, y0))
        for seg in sp.segments:
            (x1, y1), (x2, y2), (x3, y3) = seg.c1, seg.c2, seg.end
            for i in range(1, per_segment + 1):
                t = i / per_segment
                s = 1 - t
                pts.append(
                    (
                        s**3 * x0 + 3 * s**2 * t * x1 + 3 * s * t**2 * x2 + t**3 * x3,
                        s**3 * y0 + 3 * s**2 * t * y1 + 3 * s * t**2 * y2 + t**3 * y3,
                    )
                )
            x0, y0 = x3, y3
    return pts


class TestFmtNumber:
    def test_trims_trailing_zeros(self):
        assert fmt_number(1.5) == "1.5"
        assert fmt_number(3.0) == "3"
        assert fmt_number(0.1234567) == "0.123457"

    def test_negative_zero_normalized(self):
        assert fmt_number(-0.0) == "0"
        assert fmt_number(-1e-9) == "0"


class TestParseTransformList:
    def test_empty_is_identity(self):
        assert parse_transform_list("") == Affine2D()
        assert parse_transform_list("   ") == Affine2D()

    def test_translate_then_scale(self):
        assert parse_transform_list("translate(3 4) scale(2)").as_tuple() == (
            2, 0, 0, 2, 3, 4,
        )

    def test_rotate_90(self):
        m = parse_transform_list("rotate(90)")
        assert m.almost_equal(Affine2D(0, 1, -1, 0, 0, 0), tol=1e-12)

    def test_rotate_about_point(self):
        m = parse_transform_list("rotate(90 5 5)")
        expected = (
            Affine2D.translation(5, 5)
            .compose(Affine2D.rotation(90))
            .compose(Affine2D.translation(-5, -5))
        )
        assert m.almost_equal(expected, tol=1e-12)

    def test_comma_separated_arguments(self):
        assert parse_transform_list("translate(3,4)").as_tuple() == (1, 0, 0, 1, 3, 4)

    def test_matrix_form(self):
        assert parse_transform_list("matrix(1 2 3 4 5 6)").as_tuple() == (1, 2, 3, 4, 5, 6)

    def test_error_position(self):
        with pytest.raises(TransformParseError) as info:
            parse_transform_list("translate(1 1) bogus(2)")
        assert info.value.position == 15

    def test_rotate_two_args_rejected(self):
        with pytest.raises(TransformParseError):
            parse_transform_list("rotate(90 5)")

    @given(
        st.lists(
            st.sampled_from(["translate", "scale", "rotate", "skewX", "skewY"]),
            min_size=1,
            max_size=4,
        ),
        st.data(),
    )
    @settings(max_examples=100, deadline=None)
    def test_list_parse_equals_pairwise_compose(self, names, data):
        texts = []
        nums = st.floats(min_value=-50, max_value=50, allow_nan=False).map(
            lambda v: round(v, 3)
        )
        for name in names:
            if name == "translate":
                texts.append(f"translate({data.draw(nums)} {data.draw(nums)})")
            elif name == "scale":
                texts.append(f"scale({data.draw(nums)})")
            elif name == "rotate":
                texts.append(f"rotate({data.draw(nums)})")
            else:
                angle = data.draw(st.floats(min_value=-60, max_value=60).map(lambda v: round(v, 2)))
                texts.append(f"{name}({angle})")
        combined = parse_transform_list(" ".join(texts))
        stepwise = Affine2D()
        for text in texts:
            stepwise = stepwise.compose(parse_transform_list(text))
        assert combined.almost_equal(stepwise, tol=1e-9)


class TestParsePathData:
    def test_line_degree_elevation(self):
        path = parse_path_data("M0 0 L10 0")
        assert len(path.subpaths) == 1
        (seg,) = path.subpaths[0].segments
        assert seg.c1 == pytest.approx((10 / 3, 0))
        assert seg.c2 == pytest.approx((20 / 3, 0))
        assert seg.end == (10, 0)
        assert not path.subpaths[0].closed

    def test_relative_commands_resolve_absolute(self):
        path = parse_path_data("m 2 3 l 4 0")
        sp = path.subpaths[0]
        assert sp.start == (2, 3)
        assert sp.segments[-1].end == (6, 3)

    def test_arc_matches_analytic_circle(self):
        path = parse_path_data("M0 0 A 5 5 0 0 1 10 0")
        assert len(path.subpaths[0].segments) == 2
        for x, y in sample_path(path, per_segment=500):
            # circle through (0,0) and (10,0) with r=5 has center (5,0)
            assert abs(math.hypot(x - 5, y - 0) - 5) < 1e-3

    def test_missing_coordinate_error(self):
        with pytest.raises(PathParseError) as info:
            parse_path_data("M 0")
        assert info.value.expected == "y-coordinate"

    def test_empty_path_error(self):
        with pytest.raises(PathParseError):
            parse_path_data("   ")

    def test_must_start_with_moveto(self):
        with pytest.raises(PathParseError):
            parse_path_data("L 1 2")

    def test_packed_arc_flags(self):
        # flags may be packed without separators per the grammar
        path = parse_path_data("M0 0A5 5 0 0110 0")
        assert path.subpaths[0].segments[-1].end == (10, 0)

    def test_implicit_lineto_after_moveto(self):
        path = parse_path_data("M0 0 10 10 20 0")
        assert len(path.subpaths[0].segments) == 2
        assert path.subpaths[0].segments[1].end == (20, 0)

    def test_closepath_and_reopen(self):
        path = parse_path_data("M0 0 L4 0 Z L0 4")
        first, second = path.subpaths
        assert first.closed
        assert second.start == (0, 0)

    def test_smooth_cubic_reflection(self):
        path = parse_path_data("M0 0 C0 4 4 4 4 0 S8 -4 8 0")
        second = path.subpaths[0].segments[1]
        # reflection of (4,4) about (4,0) is (4,-4)
        assert second.c1 == pytest.approx((4, -4))

    def test_quadratic_and_smooth_quadratic(self):
        path = parse_path_data("M0 0 Q2 4 4 0 T8 0")
        a, b = path.subpaths[0].segments
        assert a.end == (4, 0)
        # T reflects the previous quadratic control (2,4) about (4,0) -> (6,-4)
        assert b.c1 == pytest.approx((4 + 2 * (6 - 4) / 3, 0 + 2 * (-4 - 0) / 3))

    def test_zero_radius_arc_is_line(self):
        path = parse_path_data("M0 0 A 0 5 0 0 1 10 0")
        (seg,) = path.subpaths[0].segments
        assert seg.end == (10, 0)
        assert seg.c1 == pytest.approx((10 / 3, 0))

    def test_vertical_and_horizontal(self):
        path = parse_path_data("M1 1 H5 V7 h-2 v-3")
        ends = [seg.end for seg in path.subpaths[0].segments]
        assert ends == [(5, 1), (5, 7), (3, 7), (3, 4)]


class TestPathBbox:
    def test_endpoints_only(self):
        assert path_bbox(parse_path_data("M0 0 L10 5")) == Rect(0, 0, 10, 5)

    def test_interior_extremum(self):
        box = path_bbox(parse_path_data("M0 0 C0 10 10 10 10 0"))
        assert box.min_x == pytest.approx(0)
        assert box.max_x == pytest.approx(10)
        assert box.min_y == pytest.approx(0)
        # y(t) = 30t(1-t)(...)/ interior max 7.5 at t=0.5
        assert box.max_y == pytest.approx(7.5)

    def test_closed_circle_of_arcs(self):
        d = "M5 0 A5 5 0 0 1 -5 0 A5 5 0 0 1 5 0 Z"
        box = path_bbox(parse_path_data(d))
        for got, want in zip(
            (box.min_x, box.min_y, box.max_x, box.max_y), (-5, -5, 5, 5)
        ):
            assert abs(got - want) < 1e-3

    def test_contains_samples_random_paths(self):
        rng = random.Random(7)
        for _ in range(25):
            d = f"M{rng.uniform(-10, 10):.2f} {rng.uniform(-10, 10):.2f}"
            for _ in range(rng.randint(1, 5)):
                cmd = rng.choice(["L", "C", "Q", "A"])
                if cmd == "L":
                    d += f" L{rng.uniform(-20, 20):.2f} {rng.uniform(-20, 20):.2f}"
                elif cmd == "C":
                    d += " C" + " ".join(f"{rng.uniform(-20, 20):.2f}" for _ in range(6))
                elif cmd == "Q":
                    d += " Q" + " ".join(f"{rng.uniform(-20, 20):.2f}" for _ in range(4))
                else:
                    d += (
                        f" A{rng.uniform(1, 10):.2f} {rng.uniform(1, 10):.2f} "
                        f"{rng.uniform(0, 90):.1f} {rng.randint(0, 1)} {rng.randint(0, 1)} "
                        f"{rng.uniform(-20, 20):.2f} {rng.uniform(-20, 20):.2f}"
                    )
            path = parse_path_data(d)
            box = path_bbox(path)
            for x, y in sample_path(path, per_segment=100):
                assert box.contains_point(x, y, tol=1e-9)


class TestGroupBbox:
    def doc(self, body):
        return flatten_and_assign_ids(
            parse_svg(f'<svg viewBox="0 0 100 100">{body}</svg>')
        )

    def test_union_of_two_rects(self):
        doc = self.doc(
            '<rect x="0" y="0" width="2" height="2"/>'
            '<rect x="5" y="5" width="1" height="1"/>'
        )
        assert group_bbox(doc, ["el-0", "el-1"]) == Rect(0, 0, 6, 6)

    def test_rotated_rect_is_tight(self):
        doc = self.doc('<rect x="0" y="0" width="2" height="3" transform="rotate(90)"/>')
        box = group_bbox(doc, ["el-0"])
        assert (box.min_x, box.min_y, box.max_x, box.max_y) == pytest.approx((-3, 0, 0, 2))

    def test_empty_member_list(self):
        doc = self.doc('<rect x="0" y="0" width="1" height="1"/>')
        with pytest.raises(EmptyGroup):
            group_bbox(doc, [])

    def test_unknown_member(self):
        from decomate.geometry import UnknownNodeId

        doc = self.doc('<rect x="0" y="0" width="1" height="1"/>')
        with pytest.raises(UnknownNodeId):
            group_bbox(doc, ["el-9"])

    def test_atomic_group_bbox_unions_children(self):
        doc = self.doc(
            '<g opacity="0.5" transform="translate(10 0)">'
            '<circle cx="0" cy="0" r="2"/><circle cx="6" cy="0" r="2"/></g>'
        )
        box = group_bbox(doc, ["el-0"])
        assert (box.min_x, box.min_y, box.max_x, box.max_y) == pytest.approx((8, -2, 18, 2))
