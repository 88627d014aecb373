"""Structured composition of block models.

Each block is a cospan: an interior set of labelled state variables, a
designated interface subset it exposes for gluing, and an opaque
decoration carrying its dynamics (parameters, solver output, steppers).
Composition glues blocks along declared variable identifications by a
pushout on labels: identified variables collapse to one equivalence class
and everything else stays distinct. The decoration is never inspected
here; only labels matter, which is what keeps composition associative.

Coupling factors attach to the glued object as explicit nodes referencing
classes of the quotient, giving a bipartite factor graph over shared
variable nodes.
"""

from dataclasses import dataclass, field


class CompositionError(Exception):
    pass


@dataclass(frozen=True)
class NarrativeCospan:
    """One block: named interior variables, an exposed interface subset,
    and an opaque decoration with the dynamics."""
    name: str
    interior: tuple
    interface: tuple
    decoration: object = None

    def validate(self):
        if not self.name:
            raise CompositionError("narrative needs a nonempty name")
        if len(set(self.interior)) != len(self.interior):
            raise CompositionError(f"{self.name}: duplicate interior labels")
        missing = [v for v in self.interface if v not in self.interior]
        if missing:
            raise CompositionError(
                f"{self.name}: interface labels {missing} not in interior")

    def qualified(self, var):
        if var not in self.interior:
            raise CompositionError(f"{self.name} has no variable {var!r}")
        return f"{self.name}.{var}"


@dataclass(frozen=True)
class Identification:
    """Glue left (narrative, variable) to right (narrative, variable)."""
    left: tuple
    right: tuple


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:  # path compression
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # canonical root: lexicographically smaller label
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


@dataclass(frozen=True)
class CompositeModel:
    """Result of gluing: the blocks, the identifications that glued them,
    attached factors, and the label quotient."""
    narratives: tuple
    identifications: tuple
    factors: tuple
    classes: tuple            # sorted tuple of sorted label tuples
    representative: dict = field(repr=False)

    def narrative(self, name):
        for n in self.narratives:
            if n.name == name:
                return n
        raise CompositionError(f"no narrative named {name!r}")

    def canonical(self, label):
        try:
            return self.representative[label]
        except KeyError:
            raise CompositionError(f"unknown variable label {label!r}") from None


def _flatten(parts):
    narratives, idents, factors = [], [], []
    for p in parts:
        if isinstance(p, CompositeModel):
            narratives.extend(p.narratives)
            idents.extend(p.identifications)
            factors.extend(p.factors)
        elif isinstance(p, NarrativeCospan):
            narratives.append(p)
        else:
            raise CompositionError(f"cannot compose object of type {type(p).__name__}")
    return narratives, idents, factors


def compose(parts, identifications=(), factors=()):
    """Glue blocks (or previously composed models) into one model.

    Nested composites flatten, so compose(compose(a, b), c) and
    compose(a, compose(b, c)) yield identical quotients; the normal form
    is the sorted class list."""
    parts = list(parts)
    narratives, idents, attached = _flatten(parts)
    idents = idents + list(identifications)
    attached = attached + list(factors)

    names = [n.name for n in narratives]
    if len(set(names)) != len(names):
        dupes = sorted({x for x in names if names.count(x) > 1})
        raise CompositionError(f"duplicate narrative names: {dupes}")
    for n in narratives:
        n.validate()

    by_name = {n.name: n for n in narratives}
    labels = [n.qualified(v) for n in narratives for v in n.interior]
    uf = _UnionFind(labels)

    def resolve(end):
        nname, var = end
        if nname not in by_name:
            raise CompositionError(f"identification references unknown narrative {nname!r}")
        return by_name[nname].qualified(var)

    for ident in idents:
        uf.union(resolve(ident.left), resolve(ident.right))

    groups = {}
    for lab in labels:
        groups.setdefault(uf.find(lab), []).append(lab)
    classes = tuple(sorted(tuple(sorted(g)) for g in groups.values()))
    representative = {lab: min(groups[uf.find(lab)]) for lab in labels}

    for f in attached:
        for lab in tuple(f.inputs) + tuple(f.outputs):
            if lab not in representative:
                raise CompositionError(
                    f"factor {f.id} references unknown variable {lab!r}")

    return CompositeModel(
        narratives=tuple(narratives),
        identifications=tuple(idents),
        factors=tuple(attached),
        classes=classes,
        representative=representative,
    )


@dataclass(frozen=True)
class GraphReport:
    variable_nodes: tuple     # canonical representatives of interface classes
    factor_ids: tuple
    edges: dict = field(repr=False)  # factor id -> sorted variable reps
    narratives: tuple

    @property
    def n_variable_nodes(self):
        return len(self.variable_nodes)

    @property
    def n_factor_nodes(self):
        return len(self.factor_ids)

    def to_dict(self):
        return {
            "narratives": list(self.narratives),
            "variable_nodes": list(self.variable_nodes),
            "n_variable_nodes": self.n_variable_nodes,
            "factor_nodes": list(self.factor_ids),
            "n_factor_nodes": self.n_factor_nodes,
            "edges": {k: list(v) for k, v in self.edges.items()},
        }


def validate_factor_graph(model):
    """Check the bipartite graph over interface classes and return it.

    Variable nodes are quotient classes containing at least one interface
    label. Every factor must touch at most two narratives (couplings are
    pairwise by construction) and reference only interface classes."""
    interface_labels = {
        n.qualified(v) for n in model.narratives for v in n.interface}
    interface_classes = [
        cls for cls in model.classes if any(lab in interface_labels for lab in cls)]
    variable_nodes = tuple(sorted(cls[0] for cls in interface_classes))
    node_set = set(variable_nodes)

    edges = {}
    for f in model.factors:
        touched = tuple(f.inputs) + tuple(f.outputs)
        narrs = sorted({lab.split(".", 1)[0] for lab in touched})
        if len(narrs) > 2:
            raise CompositionError(
                f"factor {f.id} spans {len(narrs)} narratives {narrs}; "
                "couplings must be pairwise")
        reps = sorted({model.canonical(lab) for lab in touched})
        outside = [r for r in reps if r not in node_set]
        if outside:
            raise CompositionError(
                f"factor {f.id} references non-interface variables {outside}")
        edges[f.id] = tuple(reps)

    return GraphReport(
        variable_nodes=variable_nodes,
        factor_ids=tuple(f.id for f in model.factors),
        edges=edges,
        narratives=tuple(n.name for n in model.narratives),
    )
