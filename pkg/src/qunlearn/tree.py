"""Measurement trees: cascaded POVMs with cumulative branch operators.

Each node carries the cumulative Kraus operator for the outcome history
leading to it; a child's operator is its local Kraus times the parent's
cumulative one (new factor on the LEFT). The POVM elements of a node's
children always sum to the parent's element, which is the conservation law
:func:`validate_tree` checks.

Trees are immutable values: :func:`attach_povm` / :func:`attach_at` return
new trees and never modify their arguments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .errors import ShapeError, TreeStructureError
from .povm import (
    DensityOperator,
    KrausOperator,
    Povm,
    UnitaryWitness,
    matrix_from_json,
    matrix_to_json,
    outcome_probability,
    unitary_witness,
)

__all__ = [
    "LeafSummary",
    "TreeNode",
    "TreeValidationReport",
    "attach_at",
    "attach_povm",
    "leaf_probabilities",
    "root_node",
    "summarize_leaves",
    "tree_from_json",
    "tree_to_json",
    "validate_tree",
]

NULLSPACE_SINGULAR_VALUE_TOL = 1e-10


@dataclass(frozen=True)
class TreeNode:
    path: tuple[int, ...]
    cumulative_kraus: KrausOperator
    children: tuple["TreeNode", ...] = ()
    local_povm: Optional[Povm] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def cumulative_element(self) -> np.ndarray:
        return self.cumulative_kraus.povm_element()

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def find(self, path: tuple[int, ...]) -> "TreeNode":
        node = self
        for step in path:
            if step >= len(node.children):
                raise TreeStructureError(f"no node at path {path}")
            node = node.children[step]
        return node


def root_node(dim: int) -> TreeNode:
    """Fresh tree root: identity cumulative operator, no history."""
    return TreeNode(path=(), cumulative_kraus=KrausOperator(np.eye(dim), "I"))


def attach_povm(node: TreeNode, p: Povm) -> TreeNode:
    """Return a copy of a leaf with one child per outcome of ``p``.

    Child cumulative operators are K_outcome @ node.cumulative_kraus, per
    the left-multiplication convention for cascaded measurements.
    """
    if not node.is_leaf:
        raise TreeStructureError(f"node at path {node.path} already has children")
    if p.dim != node.cumulative_kraus.dim:
        raise ShapeError(
            f"POVM dim {p.dim} != tree dim {node.cumulative_kraus.dim}"
        )
    children = []
    for j, k in enumerate(p.kraus_ops):
        cumulative = KrausOperator(
            k.matrix @ node.cumulative_kraus.matrix,
            label=f"{k.label}*{node.cumulative_kraus.label}",
        )
        children.append(TreeNode(path=node.path + (j,), cumulative_kraus=cumulative))
    return TreeNode(
        path=node.path,
        cumulative_kraus=node.cumulative_kraus,
        children=tuple(children),
        local_povm=p,
    )


def attach_at(root: TreeNode, path: tuple[int, ...], p: Povm) -> TreeNode:
    """Attach ``p`` at the leaf addressed by ``path``, rebuilding the spine."""
    if not path:
        return attach_povm(root, p)
    head, rest = path[0], path[1:]
    if head >= len(root.children):
        raise TreeStructureError(f"no child {head} at path {root.path}")
    new_children = list(root.children)
    new_children[head] = attach_at(root.children[head], rest, p)
    return TreeNode(
        path=root.path,
        cumulative_kraus=root.cumulative_kraus,
        children=tuple(new_children),
        local_povm=root.local_povm,
    )


@dataclass(frozen=True)
class TreeValidationReport:
    node_residuals: tuple[tuple[tuple[int, ...], float], ...]
    tolerance: float
    passed: bool
    messages: tuple[str, ...] = field(default_factory=tuple)


def validate_tree(root: TreeNode, tol: float = 1e-9) -> TreeValidationReport:
    """Check that children's POVM elements sum to the parent's at every node."""
    residuals = []
    messages = []
    for node in root.walk():
        if node.is_leaf:
            continue
        total = sum(child.cumulative_element() for child in node.children)
        residual = float(np.linalg.norm(total - node.cumulative_element()))
        residuals.append((node.path, residual))
        if residual > tol:
            messages.append(
                f"node {list(node.path)}: children sum residual {residual:.6g} > {tol:.3g}"
            )
    passed = not messages
    return TreeValidationReport(tuple(residuals), tol, passed, tuple(messages))


def leaf_probabilities(
    root: TreeNode, rho: DensityOperator
) -> list[tuple[tuple[int, ...], float]]:
    """Born probability of every leaf history; sums to 1 for valid trees."""
    out = []
    for leaf in root.leaves():
        p = Povm([leaf.cumulative_kraus])
        out.append((leaf.path, outcome_probability(p, 0, rho)))
    return out


@dataclass(frozen=True)
class LeafSummary:
    path: tuple[int, ...]
    probability_range: tuple[float, float]  # over pure states: (min sv^2, max sv^2)
    unitary_witness: Optional[UnitaryWitness]
    nullspace_dim: int


def summarize_leaves(root: TreeNode, witness_tol: float = 1e-9) -> list[LeafSummary]:
    """Classify each leaf: probability range, unitary witness, nullspace."""
    summaries = []
    for leaf in root.leaves():
        s = linalg.singular_values(leaf.cumulative_kraus.matrix)
        summaries.append(
            LeafSummary(
                path=leaf.path,
                probability_range=(float(s[-1] ** 2), float(s[0] ** 2)),
                unitary_witness=unitary_witness(leaf.cumulative_kraus, witness_tol),
                nullspace_dim=int(np.sum(s < NULLSPACE_SINGULAR_VALUE_TOL)),
            )
        )
    return summaries


# ---------------------------------------------------------------------------
# JSON serialization. Nodes are stored as {path, kraus, children} where
# "kraus" is the label of the LOCAL operator applied on the edge into the
# node (null at the root); operators are resolved by label against an
# operator registry, normally the accompanying operator-set file.
# ---------------------------------------------------------------------------


def _node_to_json(node: TreeNode, local_label: Optional[str]) -> dict:
    rec: dict = {"path": list(node.path), "kraus": local_label}
    rec["children"] = [
        _node_to_json(child, node.local_povm[j].label if node.local_povm else None)
        for j, child in enumerate(node.children)
    ]
    return rec


def tree_to_json(root: TreeNode, embed_operators: bool = True) -> dict:
    """Serialize a tree; with ``embed_operators`` the file is self-contained."""
    doc: dict = {"dim": root.cumulative_kraus.dim, "root": _node_to_json(root, None)}
    if embed_operators:
        registry: dict[str, np.ndarray] = {}
        for node in root.walk():
            if node.local_povm is None:
                continue
            for k in node.local_povm.kraus_ops:
                registry[k.label] = k.matrix
        doc["operators"] = {
            label: matrix_to_json(m) for label, m in sorted(registry.items())
        }
    return doc


def tree_from_json(doc: dict, operators: Optional[dict] = None) -> TreeNode:
    """Rebuild a tree from JSON, resolving operator labels via ``operators``.

    ``operators`` maps label -> matrix (JSON nested-list or ndarray); when
    omitted, the document's embedded "operators" table is used. Cumulative
    operators are recomputed from the local ones, so a loaded tree always
    satisfies the product convention by construction.
    """
    if "root" not in doc:
        raise ValueError("tree JSON must contain a 'root' node")
    table = operators if operators is not None else doc.get("operators")
    if table is None:
        raise ValueError("tree JSON needs an operator table ('operators' or external)")
    registry = {
        label: m if isinstance(m, np.ndarray) else matrix_from_json(m)
        for label, m in table.items()
    }
    dim = int(doc.get("dim") or next(iter(registry.values())).shape[0])

    def build(rec: dict, cumulative: np.ndarray, path: tuple[int, ...]) -> TreeNode:
        children_recs = rec.get("children", [])
        node_kraus = KrausOperator(cumulative, label="*".join(map(str, path)) or "I")
        if not children_recs:
            return TreeNode(path=path, cumulative_kraus=node_kraus)
        local_ops = []
        children = []
        for j, crec in enumerate(children_recs):
            label = crec.get("kraus")
            if label not in registry:
                raise ValueError(f"unknown operator label {label!r} in tree JSON")
            local = KrausOperator(registry[label], label)
            local_ops.append(local)
            children.append(build(crec, local.matrix @ cumulative, path + (j,)))
        return TreeNode(
            path=path,
            cumulative_kraus=node_kraus,
            children=tuple(children),
            local_povm=Povm(local_ops),
        )

    return build(doc["root"], np.eye(dim, dtype=np.complex128), ())


def load_tree(path) -> TreeNode:
    with open(path, encoding="utf-8") as fh:
        return tree_from_json(json.load(fh))


def save_tree(root: TreeNode, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_to_json(root), fh, indent=2, sort_keys=True)
        fh.write("\n")
