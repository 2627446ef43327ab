import numpy as np
import pytest

from qunlearn import (
    DensityOperator,
    KrausOperator,
    Povm,
    attach_at,
    attach_povm,
    complement_kraus,
    leaf_probabilities,
    root_node,
    summarize_leaves,
    validate_tree,
)
from qunlearn.errors import TreeStructureError
from qunlearn.rng import make_rng, random_contraction, random_density_matrix
from qunlearn.tree import TreeNode, tree_from_json, tree_to_json


def binary_povm(k0_matrix, prefix="K"):
    k0 = KrausOperator(k0_matrix, f"{prefix}0")
    return Povm([k0, complement_kraus(k0, f"{prefix}1")])


def test_attach_povm_basic():
    p = binary_povm(np.diag([0.8, 0.6]))
    tree = attach_povm(root_node(2), p)
    assert len(tree.children) == 2
    np.testing.assert_allclose(tree.children[0].cumulative_kraus.matrix, p[0].matrix)
    np.testing.assert_allclose(tree.children[1].cumulative_kraus.matrix, p[1].matrix)
    assert tree.children[0].path == (0,)


def test_attach_povm_cascade_order():
    p0 = binary_povm(np.diag([0.8, 0.6]), "A")
    p1 = binary_povm(np.array([[0.5, 0.1], [0.0, 0.6]]), "B")
    tree = attach_at(attach_povm(root_node(2), p0), (0,), p1)
    grandchild = tree.find((0, 1))
    # new operator multiplies on the left of the parent's cumulative one
    np.testing.assert_allclose(
        grandchild.cumulative_kraus.matrix, p1[1].matrix @ p0[0].matrix, atol=1e-15
    )


def test_attach_identity_povm():
    tree = attach_povm(root_node(2), Povm([KrausOperator(np.eye(2), "I")]))
    np.testing.assert_allclose(
        tree.children[0].cumulative_kraus.matrix, np.eye(2), atol=1e-15
    )


def test_attach_to_non_leaf_fails():
    tree = attach_povm(root_node(2), binary_povm(np.diag([0.8, 0.6])))
    with pytest.raises(TreeStructureError):
        attach_povm(tree, binary_povm(np.diag([0.8, 0.6])))


def test_validate_constructed_tree():
    rng = make_rng(14)
    tree = attach_povm(root_node(2), binary_povm(random_contraction(2, rng), "A"))
    tree = attach_at(tree, (0,), binary_povm(random_contraction(2, rng), "B"))
    tree = attach_at(tree, (1,), binary_povm(random_contraction(2, rng), "C"))
    report = validate_tree(tree, 1e-9)
    assert report.passed
    assert all(residual < 1e-10 for _, residual in report.node_residuals)


def test_validate_detects_deleted_child():
    tree = attach_povm(root_node(2), binary_povm(np.diag([0.8, 0.6])))
    broken = TreeNode(
        path=(),
        cumulative_kraus=tree.cumulative_kraus,
        children=tree.children[:1],
        local_povm=tree.local_povm,
    )
    report = validate_tree(broken, 1e-9)
    assert not report.passed
    assert report.messages


def test_leaf_probabilities_trivial():
    probs = leaf_probabilities(root_node(2), DensityOperator.maximally_mixed(2))
    assert probs == [((), 1.0)]


def test_leaf_probabilities_sum_to_one():
    rng = make_rng(77)
    for _ in range(5):
        tree = attach_povm(root_node(3), binary_povm(random_contraction(3, rng), "A"))
        tree = attach_at(tree, (0,), binary_povm(random_contraction(3, rng), "B"))
        rho = DensityOperator(random_density_matrix(3, rng))
        total = sum(p for _, p in leaf_probabilities(tree, rho))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_leaf_probabilities_state_independent_for_unitary_leaf():
    # two-level correction tree: the success leaf is proportional to a unitary
    from qunlearn import procrustean_plan

    rng = make_rng(31)
    k = KrausOperator(np.diag([0.8, 0.6]), "K0")
    tree = attach_povm(root_node(2), Povm([k, complement_kraus(k, "K1")]))
    tree = attach_at(tree, (0,), procrustean_plan(k).as_povm())
    values = []
    for _ in range(100):
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        rho = DensityOperator.from_pure(v)
        probs = dict(leaf_probabilities(tree, rho))
        values.append(probs[(0, 0)])
    assert max(values) - min(values) < 1e-9


def test_cumulative_matches_path_product():
    rng = make_rng(4)
    povms = {(): binary_povm(random_contraction(2, rng), "A")}
    tree = attach_povm(root_node(2), povms[()])
    povms[(0,)] = binary_povm(random_contraction(2, rng), "B")
    povms[(1,)] = binary_povm(random_contraction(2, rng), "C")
    tree = attach_at(tree, (0,), povms[(0,)])
    tree = attach_at(tree, (1,), povms[(1,)])
    for leaf in tree.leaves():
        product = np.eye(2, dtype=complex)
        for depth, outcome in enumerate(leaf.path):
            product = povms[leaf.path[:depth]][outcome].matrix @ product
        assert np.linalg.norm(leaf.cumulative_kraus.matrix - product) <= 1e-12


def test_summarize_leaves():
    from qunlearn import procrustean_plan

    k = KrausOperator(np.diag([0.8, 0.6]), "K0")
    tree = attach_povm(root_node(2), Povm([k, complement_kraus(k, "K1")]))
    tree = attach_at(tree, (0,), procrustean_plan(k).as_povm())
    summaries = {s.path: s for s in summarize_leaves(tree)}

    success = summaries[(0, 0)]
    assert success.unitary_witness is not None
    assert success.nullspace_dim == 0
    assert success.probability_range[0] == pytest.approx(0.36, abs=1e-12)
    assert success.probability_range[1] == pytest.approx(0.36, abs=1e-12)

    dead = summaries[(0, 1)]
    assert dead.unitary_witness is None
    assert dead.nullspace_dim == 1

    raw = summaries[(1,)]
    assert raw.probability_range == pytest.approx((0.36, 0.64), abs=1e-12)


def test_tree_json_roundtrip():
    rng = make_rng(6)
    tree = attach_povm(root_node(2), binary_povm(random_contraction(2, rng), "A"))
    tree = attach_at(tree, (1,), binary_povm(random_contraction(2, rng), "B"))
    doc = tree_to_json(tree)
    rebuilt = tree_from_json(doc)
    assert validate_tree(rebuilt, 1e-9).passed
    orig = {leaf.path: leaf.cumulative_kraus.matrix for leaf in tree.leaves()}
    new = {leaf.path: leaf.cumulative_kraus.matrix for leaf in rebuilt.leaves()}
    assert orig.keys() == new.keys()
    for path in orig:
        assert np.linalg.norm(orig[path] - new[path]) <= 1e-12


def test_tree_json_unknown_label():
    tree = attach_povm(root_node(2), binary_povm(np.diag([0.8, 0.6]), "A"))
    doc = tree_to_json(tree)
    del doc["operators"]["A0"]
    with pytest.raises(ValueError):
        tree_from_json(doc)
