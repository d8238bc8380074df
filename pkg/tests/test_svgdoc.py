import pytest

from decomate.geometry import Affine2D, Rect
from decomate.svgdoc import (
    EmptyDocument,
    MalformedXml,
    MissingReference,
    UnsupportedFeature,
    flatten_and_assign_ids,
    leaf_sequence,
    parse_svg,
    serialize_svg,
)
from svg_corpus import corpus


def composed_leaf_transforms(doc):
    """Oracle: ancestor-transform product per leaf entry, in paint order."""
    out = []

    def walk(node, xf):
        own = xf if node.transform is None else xf.compose(node.transform)
        if node.is_leaf_entry():
            out.append((node, own))
        else:
            for child in node.children:
                walk(child, own)

    for child in doc.root_children:
        walk(child, Affine2D())
    return out


class TestParseSvg:
    def test_viewbox_and_rect_leaf(self):
        doc = parse_svg('<svg viewBox="0 0 10 10"><rect x="1" y="1" width="2" height="3"/></svg>')
        assert doc.view_box == Rect(0, 0, 10, 10)
        assert len(doc.root_children) == 1
        assert doc.root_children[0].kind == "rect"

    def test_group_with_two_circles(self):
        doc = parse_svg('<svg><g><circle r="1"/><circle r="2"/></g></svg>')
        (group,) = doc.root_children
        assert group.kind == "group"
        assert [c.kind for c in group.children] == ["circle", "circle"]
        assert [c.attrs["r"] for c in group.children] == ["1", "2"]

    def test_truncated_input_is_malformed(self):
        with pytest.raises(MalformedXml) as info:
            parse_svg("<svg><rect")
        assert info.value.position is not None

    def test_empty_input(self):
        with pytest.raises(EmptyDocument):
            parse_svg("   \n ")

    @pytest.mark.parametrize("tag", ["script", "animate", "foreignObject", "style"])
    def test_rejected_elements(self, tag):
        with pytest.raises(UnsupportedFeature) as info:
            parse_svg(f'<svg><{tag}/></svg>')
        assert info.value.feature == tag

    def test_unknown_element_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_svg("<svg><blink/></svg>")

    def test_non_svg_root(self):
        with pytest.raises(UnsupportedFeature):
            parse_svg("<html><body/></html>")

    def test_missing_gradient_reference(self):
        with pytest.raises(MissingReference) as info:
            parse_svg('<svg><rect width="1" height="1" fill="url(#nope)"/></svg>')
        assert info.value.ref == "nope"

    def test_metadata_dropped(self):
        doc = parse_svg("<svg><title>hi</title><desc>x</desc><rect width='1' height='1'/></svg>")
        assert [n.kind for n in doc.root_children] == ["rect"]

    def test_namespaced_svg(self):
        doc = parse_svg(
            '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 4 4">'
            '<circle r="2"/></svg>'
        )
        assert doc.root_children[0].kind == "circle"

    def test_use_requires_defs_target(self):
        doc = parse_svg(
            '<svg><defs><clipPath id="c"><rect width="1" height="1"/></clipPath></defs>'
            '<use xlink:href="#c" xmlns:xlink="http://www.w3.org/1999/xlink"/></svg>'
        )
        assert doc.root_children[0].kind == "use"
        with pytest.raises(MissingReference):
            parse_svg('<svg><use href="#ghost"/></svg>')

    def test_text_with_tspan_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_svg("<svg><text><tspan>a</tspan></text></svg>")

    def test_text_content_kept(self):
        doc = parse_svg('<svg><text x="1" y="2">hello</text></svg>')
        assert doc.root_children[0].text == "hello"

    def test_width_height_fallback_viewbox(self):
        doc = parse_svg('<svg width="50" height="30"><rect width="1" height="1"/></svg>')
        assert doc.view_box == Rect(0, 0, 50, 30)

    def test_bad_transform_is_malformed(self):
        with pytest.raises(MalformedXml):
            parse_svg('<svg><rect width="1" height="1" transform="wobble(3)"/></svg>')


class TestFlatten:
    def test_translate_composition(self):
        doc = parse_svg(
            '<svg><g transform="translate(2 3)"><g transform="translate(1 1)">'
            '<rect width="1" height="1"/></g></g></svg>'
        )
        flat = flatten_and_assign_ids(doc)
        (leaf,) = flat.root_children
        assert leaf.transform.almost_equal(Affine2D.translation(3, 4), tol=1e-12)

    def test_fill_inheritance(self):
        doc = parse_svg('<svg><g fill="red"><path d="M0 0 L1 1"/></g></svg>')
        flat = flatten_and_assign_ids(doc)
        assert flat.root_children[0].attrs["fill"] == "red"

    def test_child_fill_wins_over_group(self):
        doc = parse_svg('<svg><g fill="red"><path d="M0 0 L1 1" fill="blue"/></g></svg>')
        flat = flatten_and_assign_ids(doc)
        assert flat.root_children[0].attrs["fill"] == "blue"

    def test_nearest_group_wins(self):
        doc = parse_svg(
            '<svg><g fill="red"><g fill="green"><path d="M0 0 L1 1"/></g></g></svg>'
        )
        flat = flatten_and_assign_ids(doc)
        assert flat.root_children[0].attrs["fill"] == "green"

    def test_opacity_group_stays_atomic(self):
        doc = parse_svg(
            '<svg><g opacity="0.5"><circle r="1"/><circle r="2"/></g></svg>'
        )
        flat = flatten_and_assign_ids(doc)
        (node,) = flat.root_children
        assert node.kind == "group"
        assert node.atomic
        assert len(node.children) == 2
        assert leaf_sequence(flat) == ["el-0"]

    def test_opacity_one_group_dissolves(self):
        doc = parse_svg('<svg><g opacity="1"><circle r="1"/></g></svg>')
        flat = flatten_and_assign_ids(doc)
        assert flat.root_children[0].kind == "circle"

    def test_rotate_then_translate_matrix(self):
        doc = parse_svg(
            '<svg><g transform="rotate(90)"><rect width="1" height="1" '
            'transform="translate(1 0)"/></g></svg>'
        )
        flat = flatten_and_assign_ids(doc)
        leaf = flat.root_children[0]
        assert leaf.transform.almost_equal(Affine2D(0, 1, -1, 0, 0, 1), tol=1e-12)

    def test_ids_assigned_in_paint_order(self):
        doc = parse_svg(
            '<svg><g><rect width="1" height="1"/><circle r="1"/></g><line x2="1" y2="1"/></svg>'
        )
        flat = flatten_and_assign_ids(doc)
        assert leaf_sequence(flat) == ["el-0", "el-1", "el-2"]

    def test_existing_id_moves_to_data_orig_id(self):
        doc = parse_svg('<svg><rect id="star" width="1" height="1"/></svg>')
        flat = flatten_and_assign_ids(doc)
        leaf = flat.root_children[0]
        assert leaf.attrs["id"] == "el-0"
        assert leaf.attrs["data-orig-id"] == "star"

    def test_flatten_idempotent_on_reparse(self):
        doc = parse_svg(
            '<svg><g transform="scale(2)" fill="red"><rect id="a" width="1" height="1"/>'
            '<g opacity="0.5"><circle r="1"/></g></g></svg>'
        )
        flat = flatten_and_assign_ids(doc)
        text = serialize_svg(flat)
        again = flatten_and_assign_ids(parse_svg(text))
        assert serialize_svg(again) == text

    def test_style_group_stays_atomic(self):
        doc = parse_svg('<svg><g style="fill:red"><circle r="1"/></g></svg>')
        flat = flatten_and_assign_ids(doc)
        assert flat.root_children[0].atomic


class TestSerialize:
    def test_round_trip_fixed_point(self):
        for svg in corpus():
            first = parse_svg(svg)
            second = parse_svg(serialize_svg(first))
            assert first.structurally_equal(second)
            assert serialize_svg(first) == serialize_svg(second)

    def test_serialization_deterministic(self):
        for svg in corpus(8):
            doc = parse_svg(svg)
            assert serialize_svg(doc) == serialize_svg(doc)

    def test_defs_block_precedes_leaves(self):
        svg = (
            '<svg><defs><linearGradient id="g1"><stop offset="0"/></linearGradient></defs>'
            '<rect width="1" height="1" fill="url(#g1)"/></svg>'
        )
        out = serialize_svg(parse_svg(svg))
        assert out.count("<defs>") == 1
        assert out.index("<defs>") < out.index("<rect")

    def test_gradient_outside_defs_collected(self):
        svg = (
            '<svg><linearGradient id="g1"><stop offset="0"/></linearGradient>'
            '<rect width="1" height="1" fill="url(#g1)"/></svg>'
        )
        out = serialize_svg(parse_svg(svg))
        assert out.count("<defs>") == 1

    def test_node_ids_emitted(self):
        flat = flatten_and_assign_ids(parse_svg('<svg><circle r="1"/></svg>'))
        assert 'id="el-0"' in serialize_svg(flat)

    def test_attr_escaping(self):
        doc = parse_svg('<svg><text x="0" y="0" font-family="A&amp;B">a&lt;b</text></svg>')
        out = serialize_svg(doc)
        assert 'font-family="A&amp;B"' in out
        assert ">a&lt;b</text>" in out


class TestLeafSequence:
    def test_flat_document(self):
        flat = flatten_and_assign_ids(
            parse_svg('<svg><rect width="1" height="1"/><circle r="1"/><line x2="1" y2="1"/></svg>')
        )
        assert leaf_sequence(flat) == ["el-0", "el-1", "el-2"]

    def test_atomic_group_in_middle(self):
        flat = flatten_and_assign_ids(
            parse_svg(
                '<svg><rect width="1" height="1"/>'
                '<g opacity="0.5"><circle r="1"/></g>'
                '<line x2="1" y2="1"/></svg>'
            )
        )
        seq = leaf_sequence(flat)
        assert len(seq) == 3
        assert seq[1] == "el-1"
        assert flat.find("el-1").kind == "group"

    def test_empty_root(self):
        assert leaf_sequence(flatten_and_assign_ids(parse_svg("<svg></svg>"))) == []


class TestInvariantsOnCorpus:
    def test_paint_order_and_geometry_preserved(self):
        for svg in corpus():
            doc = parse_svg(svg)
            expected = composed_leaf_transforms(doc)
            flat = flatten_and_assign_ids(doc)
            leaves = flat.leaf_entries()
            assert len(leaves) == len(expected)
            for leaf, (orig, composed) in zip(leaves, expected):
                assert leaf.kind == orig.kind
                got = leaf.transform or Affine2D()
                assert got.almost_equal(composed, tol=1e-9)
