"""Structured composition: gluing laws, decoration opacity, and the
bipartite factor graph."""

import random

import pytest

from cosim.composition import (CompositionError,
                               Identification, NarrativeCospan, compose,
                               validate_factor_graph)
from cosim.config import default_config
from cosim.couplings import FactorSpec
from cosim.engine import build_model


def toy(name, labels, iface=None):
    return NarrativeCospan(
        name=name, interior=tuple(labels),
        interface=tuple(labels if iface is None else iface))


def toy_factor(fid, inputs, outputs):
    ins, outs = tuple(inputs), tuple(outputs)
    return FactorSpec(id=fid, source=ins[0].split(".")[0],
                      target=outs[0].split(".")[0], kind="hard",
                      evaluator=None, inputs=ins, outputs=outs,
                      domain=((0.0, 1.0),) * len(ins))


class TrapDecoration:
    """Raises on any inspection; composition must treat it as a black box."""

    def __getattr__(self, name):
        raise AssertionError(f"decoration attribute {name!r} was read")

    def __getitem__(self, key):
        raise AssertionError(f"decoration item {key!r} was read")

    def __iter__(self):
        raise AssertionError("decoration was iterated")

    def __len__(self):
        raise AssertionError("decoration length was taken")

    def __bool__(self):
        raise AssertionError("decoration was truth-tested")

    def __contains__(self, item):
        raise AssertionError("decoration was probed for membership")

    def __call__(self, *a, **k):
        raise AssertionError("decoration was called")


# --- gluing ------------------------------------------------------------------

def test_two_block_identification_example():
    econ = toy("economy", ("y", "pi", "i", "L"))
    epi = toy("epidemic", ("S", "E", "I", "R", "D", "N"))
    model = compose([econ, epi],
                    identifications=[Identification(("epidemic", "N"),
                                                    ("economy", "L"))])
    assert len(model.classes) == 9
    sizes = sorted(len(c) for c in model.classes)
    assert sizes == [1] * 8 + [2]
    assert ("economy.L", "epidemic.N") in model.classes
    assert model.canonical("epidemic.N") == "economy.L"
    assert model.canonical("economy.L") == "economy.L"


def test_empty_identifications_is_disjoint_union():
    a, b = toy("a", ("x", "y")), toy("b", ("p", "q", "r"))
    model = compose([a, b])
    assert len(model.classes) == 5
    assert all(len(c) == 1 for c in model.classes)


def test_identification_closure_chains():
    a, b, c = toy("a", ("x",)), toy("b", ("x",)), toy("c", ("x",))
    model = compose([a, b, c], identifications=[
        Identification(("a", "x"), ("b", "x")),
        Identification(("b", "x"), ("c", "x")),
    ])
    assert model.classes == (("a.x", "b.x", "c.x"),)
    assert model.canonical("c.x") == "a.x"


def test_merge_count_invariant():
    # |quotient| = sum of interiors minus non-trivial merges
    a, b = toy("a", ("x", "y", "z")), toy("b", ("x", "y"))
    model = compose([a, b], identifications=[
        Identification(("a", "x"), ("b", "x")),
        Identification(("a", "x"), ("b", "x")),   # repeat merges nothing new
        Identification(("a", "y"), ("b", "y")),
    ])
    assert len(model.classes) == 5 - 2


# --- associativity -----------------------------------------------------------

def _four_blocks():
    return [
        toy("a", ("x", "y")),
        toy("b", ("x", "z")),
        toy("c", ("w",)),
        toy("d", ("w", "v")),
    ]


IDENTS = (
    Identification(("a", "x"), ("b", "x")),
    Identification(("b", "z"), ("c", "w")),
    Identification(("c", "w"), ("d", "w")),
)

FACTORS = (
    toy_factor("t1", ("a.x",), ("d.v",)),
    toy_factor("t2", ("b.z",), ("b.x",)),
)


def _random_nesting(parts, rng):
    parts = list(parts)
    rng.shuffle(parts)
    while len(parts) > 1:
        i = rng.randrange(len(parts) - 1)
        merged = compose([parts[i], parts[i + 1]])
        parts[i: i + 2] = [merged]
    return parts[0]


def test_associativity_normal_form():
    flat = compose(_four_blocks(), identifications=IDENTS, factors=FACTORS)
    rng = random.Random(20260819)
    for _ in range(25):
        nested = _random_nesting(_four_blocks(), rng)
        model = compose([nested], identifications=IDENTS, factors=FACTORS)
        assert model.classes == flat.classes
        assert model.representative == flat.representative
        assert tuple(f.id for f in model.factors) == tuple(
            f.id for f in flat.factors)
        rep_n = validate_factor_graph(model)
        rep_f = validate_factor_graph(flat)
        assert rep_n.variable_nodes == rep_f.variable_nodes
        assert rep_n.edges == rep_f.edges


def test_explicit_left_vs_right_nesting():
    n1, n2, n3, n4 = _four_blocks()
    left = compose([compose([compose([n1, n2]), n3]), n4],
                   identifications=IDENTS)
    right = compose([n1, compose([n2, compose([n3, n4])])],
                    identifications=IDENTS)
    assert left.classes == right.classes
    assert left.representative == right.representative


def test_pairwise_compose_with_inner_identifications():
    n1, n2, n3, n4 = _four_blocks()
    inner = compose([n1, n2], identifications=[IDENTS[0]])
    outer = compose([inner, n3, n4], identifications=list(IDENTS[1:]),
                    factors=FACTORS)
    flat = compose([n1, n2, n3, n4], identifications=IDENTS, factors=FACTORS)
    assert outer.classes == flat.classes
    assert outer.identifications == flat.identifications


# --- decoration opacity ------------------------------------------------------

def test_decoration_opacity_sentinel():
    blocks = [
        NarrativeCospan(name="a", interior=("x", "y"), interface=("x",),
                        decoration=TrapDecoration()),
        NarrativeCospan(name="b", interior=("x",), interface=("x",),
                        decoration=TrapDecoration()),
    ]
    model = compose(blocks,
                    identifications=[Identification(("a", "x"), ("b", "x"))],
                    factors=[toy_factor("t1", ("a.x",), ("b.x",))])
    report = validate_factor_graph(model)
    assert report.n_variable_nodes == 1
    assert report.n_factor_nodes == 1
    # the sentinel rode through untouched and is still the same object
    assert model.narrative("a").decoration is blocks[0].decoration


def test_recomposition_preserves_decorations():
    trap = TrapDecoration()
    inner = compose([NarrativeCospan(name="a", interior=("x",),
                                     interface=("x",), decoration=trap),
                     toy("b", ("y",))])
    outer = compose([inner, toy("c", ("z",))])
    assert outer.narrative("a").decoration is trap


# --- error paths -------------------------------------------------------------

def test_duplicate_narrative_names_rejected():
    with pytest.raises(CompositionError, match="duplicate"):
        compose([toy("a", ("x",)), toy("a", ("y",))])


def test_duplicate_interior_labels_rejected():
    with pytest.raises(CompositionError, match="duplicate interior"):
        compose([toy("a", ("x", "x"))])


def test_interface_outside_interior_rejected():
    with pytest.raises(CompositionError, match="not in interior"):
        compose([toy("a", ("x",), iface=("y",))])


def test_identification_unknown_narrative():
    with pytest.raises(CompositionError, match="unknown narrative"):
        compose([toy("a", ("x",))],
                identifications=[Identification(("a", "x"), ("nope", "x"))])


def test_identification_unknown_variable():
    with pytest.raises(CompositionError, match="no variable"):
        compose([toy("a", ("x",)), toy("b", ("y",))],
                identifications=[Identification(("a", "zz"), ("b", "y"))])


def test_factor_unknown_endpoint():
    with pytest.raises(CompositionError, match="unknown variable"):
        compose([toy("a", ("x",))],
                factors=[toy_factor("t1", ("a.zz",), ("a.x",))])


def test_compose_rejects_foreign_objects():
    with pytest.raises(CompositionError, match="cannot compose"):
        compose([toy("a", ("x",)), 42])


def test_empty_name_rejected():
    with pytest.raises(CompositionError, match="nonempty name"):
        compose([toy("", ("x",))])


def test_canonical_unknown_label():
    model = compose([toy("a", ("x",))])
    with pytest.raises(CompositionError, match="unknown variable label"):
        model.canonical("b.x")
    with pytest.raises(CompositionError, match="no narrative"):
        model.narrative("b")


def test_factor_graph_rejects_three_narrative_factor():
    model = compose([toy("a", ("x",)), toy("b", ("y",)), toy("c", ("z",))],
                    factors=[toy_factor("t1", ("a.x", "b.y"), ("c.z",))])
    with pytest.raises(CompositionError, match="pairwise"):
        validate_factor_graph(model)


def test_factor_graph_rejects_non_interface_reference():
    model = compose([toy("a", ("x", "hidden"), iface=("x",))],
                    factors=[toy_factor("t1", ("a.hidden",), ("a.x",))])
    with pytest.raises(CompositionError, match="non-interface"):
        validate_factor_graph(model)


def test_factor_edges_use_canonical_representatives():
    a, b = toy("a", ("x",)), toy("b", ("x", "y"))
    model = compose([a, b],
                    identifications=[Identification(("a", "x"), ("b", "x"))],
                    factors=[toy_factor("t1", ("b.x",), ("b.y",))])
    report = validate_factor_graph(model)
    assert report.edges["t1"] == ("a.x", "b.y")


def test_empty_factor_list_trivial_report():
    model = compose([toy("a", ("x",))])
    report = validate_factor_graph(model)
    assert report.n_factor_nodes == 0
    assert report.factor_ids == ()
    assert report.edges == {}
    assert report.variable_nodes == ("a.x",)


# --- the shipped model -------------------------------------------------------

def test_three_narrative_graph_counts():
    cfg = default_config(particles=2, weeks=2)
    report = validate_factor_graph(build_model(cfg))
    assert report.n_variable_nodes == 9
    assert report.n_factor_nodes == 5
    assert report.factor_ids == ("f1", "f2", "f4", "f5", "f6")
    assert report.narratives == ("economy", "epidemic", "vaccine")


def test_four_narrative_graph_counts():
    cfg = default_config(particles=2, weeks=2, narratives=4)
    report = validate_factor_graph(build_model(cfg))
    assert report.n_variable_nodes == 12
    assert report.n_factor_nodes == 10
    assert report.factor_ids == ("f1", "f2", "f4", "f5", "f6",
                                 "f7", "f8", "f9", "f10", "f11")


def test_population_labour_identification_in_shipped_model():
    cfg = default_config(particles=2, weeks=2)
    model = build_model(cfg)
    assert model.canonical("epidemic.N") == model.canonical("economy.L")
    assert ("economy.L", "epidemic.N") in model.classes


def test_empty_mask_composes_factorless_model():
    cfg = default_config(particles=2, weeks=2, factor_mask=frozenset())
    report = validate_factor_graph(build_model(cfg))
    assert report.n_factor_nodes == 0
    assert report.n_variable_nodes == 9


def test_model_to_dict_roundtrip_fields():
    cfg = default_config(particles=2, weeks=2, narratives=4)
    d = validate_factor_graph(build_model(cfg)).to_dict()
    assert d["n_variable_nodes"] == 12
    assert d["n_factor_nodes"] == 10
    assert set(d["edges"]) == set(d["factor_nodes"])
    assert all(isinstance(v, list) for v in d["edges"].values())
