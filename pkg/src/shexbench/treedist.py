"""Schema-to-tree conversion and edit-distance similarity metrics.

A schema becomes a rooted labeled tree: the focus class at the root, one child
per constraint predicate, below each predicate its node-constraint label, and
below that a single cardinality leaf.  Distances use the Zhang-Shasha ordered
tree edit distance; the normalized variant divides by three times the number
of ground-truth constraints (the cost of deleting the ground truth outright).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyDatasetError
from .model import (
    DatatypeConstraint,
    Iri,
    NodeConstraint,
    NodeKindIri,
    Schema,
    ShapeRef,
    ValueSet,
    canonicalize,
    classes_of,
    render_value,
)


class EmptyGroundTruthError(ValueError):
    """Normalization is undefined for a ground truth with no constraints."""


@dataclass(frozen=True)
class TreeNode:
    """Ordered labeled tree node."""

    label: str
    children: tuple["TreeNode", ...] = ()

    def size(self) -> int:
        return 1 + sum(child.size() for child in self.children)


@dataclass(frozen=True)
class EditCostModel:
    """Unit-style edit costs; relabeling identical labels is free."""

    insert_cost: int = 1
    delete_cost: int = 1
    relabel_cost: int = 1

    def __post_init__(self) -> None:
        if min(self.insert_cost, self.delete_cost, self.relabel_cost) < 0:
            raise ValueError("edit costs must be non-negative")

    def relabel(self, a: str, b: str) -> int:
        return 0 if a == b else self.relabel_cost


UNIT_COSTS = EditCostModel()


def _node_label(nc: NodeConstraint, schema: Schema) -> str:
    if isinstance(nc, NodeKindIri):
        return "IRI"
    if isinstance(nc, DatatypeConstraint):
        return nc.datatype.value
    if isinstance(nc, ValueSet):
        return "[" + " ".join(sorted(render_value(v) for v in nc.values)) + "]"
    if isinstance(nc, ShapeRef):
        classes = classes_of(nc, schema)
        return "@[" + " ".join(sorted(c.value for c in classes)) + "]"
    raise TypeError(f"not a node constraint: {nc!r}")


def schema_to_tree(schema: Schema, root_label: str | None = None) -> TreeNode:
    """Fixed-depth tree over the start shape of the canonicalized schema.

    Shape names never appear: the root carries the focus-class IRI and shape
    references are rendered as the sorted typing-class set of their target.
    """
    canon = canonicalize(schema)
    if root_label is None:
        root_label = canon.focus_class.value if canon.focus_class else canon.start_label
    children = []
    for constraint in canon.start_shape.constraints:
        leaf = TreeNode(constraint.cardinality.range_label())
        node = TreeNode(_node_label(constraint.node_constraint, canon), (leaf,))
        children.append(TreeNode(constraint.predicate.value, (node,)))
    return TreeNode(root_label, tuple(children))


def _postorder(root: TreeNode) -> tuple[list[TreeNode], list[int]]:
    """Postorder node list plus leftmost-leaf-descendant index per node."""
    nodes: list[TreeNode] = []
    lmds: list[int] = []

    def walk(node: TreeNode) -> int:
        child_indices = [walk(child) for child in node.children]
        index = len(nodes)
        nodes.append(node)
        lmds.append(lmds[child_indices[0]] if child_indices else index)
        return index

    walk(root)
    return nodes, lmds


def _keyroots(lmds: list[int]) -> list[int]:
    last: dict[int, int] = {}
    for index, lmd in enumerate(lmds):
        last[lmd] = index
    return sorted(last.values())


def tree_edit_distance(a: TreeNode, b: TreeNode, costs: EditCostModel = UNIT_COSTS) -> int:
    """Minimum edit cost transforming ``a`` into ``b`` (Zhang-Shasha).

    Runs in O(|a|·|b|) space and better-than-quartic time; symmetric under
    unit costs.
    """
    a_nodes, a_lmds = _postorder(a)
    b_nodes, b_lmds = _postorder(b)
    treedists = [[0] * len(b_nodes) for _ in range(len(a_nodes))]
    delete, insert = costs.delete_cost, costs.insert_cost

    def compute(i: int, j: int) -> None:
        m = i - a_lmds[i] + 2
        n = j - b_lmds[j] + 2
        fd = [[0] * n for _ in range(m)]
        ioff = a_lmds[i] - 1
        joff = b_lmds[j] - 1
        for x in range(1, m):
            fd[x][0] = fd[x - 1][0] + delete
        for y in range(1, n):
            fd[0][y] = fd[0][y - 1] + insert
        for x in range(1, m):
            for y in range(1, n):
                if a_lmds[i] == a_lmds[x + ioff] and b_lmds[j] == b_lmds[y + joff]:
                    fd[x][y] = min(
                        fd[x - 1][y] + delete,
                        fd[x][y - 1] + insert,
                        fd[x - 1][y - 1] + costs.relabel(a_nodes[x + ioff].label, b_nodes[y + joff].label),
                    )
                    treedists[x + ioff][y + joff] = fd[x][y]
                else:
                    p = a_lmds[x + ioff] - 1 - ioff
                    q = b_lmds[y + joff] - 1 - joff
                    fd[x][y] = min(
                        fd[x - 1][y] + delete,
                        fd[x][y - 1] + insert,
                        fd[p][q] + treedists[x + ioff][y + joff],
                    )

    for i in _keyroots(a_lmds):
        for j in _keyroots(b_lmds):
            compute(i, j)
    return treedists[-1][-1]


def _paired_trees(generated: Schema, ground_truth: Schema) -> tuple[TreeNode, TreeNode]:
    # Both schemas target the same class by construction, so both roots carry
    # the ground truth's focus-class label and never contribute relabel cost.
    gt_canon = canonicalize(ground_truth)
    root = gt_canon.focus_class.value if gt_canon.focus_class else gt_canon.start_label
    return schema_to_tree(generated, root_label=root), schema_to_tree(gt_canon, root_label=root)


def schema_ged(generated: Schema, ground_truth: Schema, costs: EditCostModel = UNIT_COSTS) -> int:
    """Edit distance between the schema trees of a generated/ground-truth pair."""
    tree_gen, tree_gt = _paired_trees(generated, ground_truth)
    return tree_edit_distance(tree_gen, tree_gt, costs)


def nged(generated: Schema, ground_truth: Schema, costs: EditCostModel = UNIT_COSTS) -> float:
    """Edit distance normalized by 3x the ground-truth constraint count.

    0 for identical trees, exactly 1 for an empty generated schema, and above
    1 when the generated schema needs more edits than deleting the ground
    truth would.
    """
    gt_size = len(canonicalize(ground_truth).start_shape.constraints)
    if gt_size == 0:
        raise EmptyGroundTruthError("ground-truth schema has no constraints")
    return schema_ged(generated, ground_truth, costs) / (3 * gt_size)


def aggregate_distances(pairs: list[tuple[Schema, Schema]]) -> tuple[float, float]:
    """Mean GED and mean NGED over (generated, ground_truth) pairs."""
    if not pairs:
        raise EmptyDatasetError("no schema pairs to aggregate")
    geds = []
    ngeds = []
    for generated, ground_truth in pairs:
        geds.append(schema_ged(generated, ground_truth))
        ngeds.append(nged(generated, ground_truth))
    return sum(geds) / len(geds), sum(ngeds) / len(ngeds)
