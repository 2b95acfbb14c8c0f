import itertools

import numpy as np
import pytest

from elastonet.assembly import assemble
from elastonet.errors import NegativeStiffness, UnfixableFloppy
from elastonet.model import INTERIOR, TERMINAL, Network, Node, Spring
from elastonet.random_networks import random_network, with_dangling_node
from elastonet.reduce import floppy_modes
from elastonet.robust import (
    Perturbation,
    apply_perturbation,
    drift_grid,
    eliminate_floppy,
    floppy_nullspace_containment,
    stability_experiment,
)

from conftest import series_chain

EPS = np.logspace(-6, -2, 5)


def braced_chain() -> Network:
    """Series chain plus an unattached terminal diagonally above the middle node."""
    net = series_chain()
    return net.with_nodes([Node("c", (1.5, 1), 0, TERMINAL)])


class TestApplyPerturbation:
    def test_zero_epsilon_is_identity(self):
        net = series_chain()
        pert = Perturbation({("a", "m"): 3.0}, ((("a", "b"), 1.0),), 0.0)
        moved = apply_perturbation(net, pert)
        assert {s.key: s.stiffness for s in moved.springs if s.stiffness} == {s.key: s.stiffness for s in net.springs}
        np.testing.assert_array_equal(assemble(moved).K, assemble(net).K)

    def test_scale_one_spring(self):
        moved = apply_perturbation(series_chain(), Perturbation({("a", "m"): 1.0}, (), 0.5))
        stiff = {s.key: s.stiffness for s in moved.springs}
        assert stiff[frozenset(("a", "m"))] == pytest.approx(1.5)
        assert stiff[frozenset(("m", "b"))] == pytest.approx(1.0)

    def test_added_spring_blocks(self):
        net = series_chain()
        moved = apply_perturbation(net, Perturbation({}, ((("a", "b"), 1.0),), 1e-6))
        dK = assemble(moved).K - assemble(net).K
        n = np.array([1.0, 0.0])
        B = 1e-6 * np.outer(n, n)
        np.testing.assert_allclose(dK[np.ix_([0, 1, 4, 5], [0, 1, 4, 5])], np.block([[B, -B], [-B, B]]), atol=1e-18)

    def test_negative_stiffness(self):
        with pytest.raises(NegativeStiffness):
            apply_perturbation(series_chain(), Perturbation({("a", "m"): -10.0}, (), 0.5))

    def test_invalid_factors(self):
        with pytest.raises(ValueError):
            Perturbation({}, ((("a", "b"), 0.0),), 0.1)
        with pytest.raises(ValueError):
            Perturbation({}, (), -1.0)


class TestStability:
    def test_single_epsilon_has_no_slope(self):
        rep = stability_experiment(series_chain(), Perturbation({("a", "m"): 1.0}), [1e-3], [0.0])
        assert rep.slope is None
        assert len(rep.errors) == 1
        assert "undefined" in rep.lines()[-1]

    def test_scaled_springs_linear_drift(self, rng):
        net = random_network(rng, 2, 3, 3, mass_prob=1.0)
        pert = Perturbation({s.endpoints: rng.uniform(0.5, 1.5) for s in net.springs})
        omegas = np.concatenate([[0.0], drift_grid(net, count=8)])
        rep = stability_experiment(net, pert, EPS, omegas)
        assert rep.slope == pytest.approx(1.0, abs=0.1)

    def test_brace_shrinking_nullspace_still_linear(self):
        net = braced_chain()
        pert = Perturbation({}, ((("m", "c"), 1.0),))
        rep = stability_experiment(net, pert, EPS, [0.0, 0.5])
        assert rep.slope >= 0.9
        assert floppy_modes(apply_perturbation(net, pert.with_epsilon(1e-3))).empty


class TestContainment:
    def test_complete_graph_on_chain(self):
        net = series_chain()
        added = tuple(((a.label, b.label), 1.0) for a, b in itertools.combinations(net.nodes, 2)
                      if frozenset((a.label, b.label)) not in {s.key for s in net.springs})
        assert floppy_nullspace_containment(braced_chain(), Perturbation({}, ((("m", "c"), 1.0),), 1e-3))
        assert floppy_nullspace_containment(net, Perturbation({}, added, 1e-3))

    def test_scaling_only(self):
        net = series_chain()
        assert floppy_nullspace_containment(net, Perturbation({("a", "m"): 1.0, ("m", "b"): 2.0}, (), 1e-3))

    def test_random_added_springs(self, rng):
        for _ in range(20):
            net = with_dangling_node(rng, random_network(rng, 2, 3, 3, edge_prob=0.2))
            labels = net.labels
            pairs = [tuple(rng.choice(labels, 2, replace=False)) for _ in range(2)]
            pert = Perturbation({}, tuple((p, rng.uniform(0.5, 2.0)) for p in pairs), 1e-3)
            assert floppy_nullspace_containment(net, pert)


class TestEliminateFloppy:
    def test_series_chain(self):
        drifts = []
        for eps in (1e-3, 1e-4, 1e-5):
            fix = eliminate_floppy(series_chain(), eps)
            assert fix.success
            drifts.append(fix.residual_drift)
        slope = np.polyfit(np.log([1e-3, 1e-4, 1e-5]), np.log(drifts), 1)[0]
        assert slope >= 0.9
        # collinear planar terminals need anchors
        assert len(fix.anchor_nodes) == 2

    def test_rigid_network_needs_no_anchor(self):
        net = Network(
            2,
            (
                Node("a", (0, 0), 0, TERMINAL),
                Node("b", (1, 0), 0, TERMINAL),
                Node("c", (0.5, 1), 0, TERMINAL),
                Node("i", (0.5, 0.4), 1.0, INTERIOR),
            ),
            tuple(Spring((x, "i"), 1.0) for x in "abc"),
        )
        big = eliminate_floppy(net, 1e-3)
        small = eliminate_floppy(net, 1e-6)
        assert big.anchor_nodes == ()
        assert small.residual_drift < big.residual_drift * 1e-2

    def test_collinear_terminals_in_3d(self):
        net = Network(
            3,
            (
                Node("a", (0, 0, 0), 0, TERMINAL),
                Node("b", (2, 0, 0), 0, TERMINAL),
                Node("m", (1, 0.5, 0), 0, INTERIOR),
            ),
            (Spring(("a", "m"), 1.0), Spring(("m", "b"), 1.0)),
        )
        with pytest.raises(UnfixableFloppy):
            eliminate_floppy(net, 1e-3)

    def test_coplanar_terminals_in_3d(self):
        net = Network(
            3,
            (
                Node("a", (0, 0, 0), 0, TERMINAL),
                Node("b", (1, 0, 0), 0, TERMINAL),
                Node("c", (0, 1, 0), 0, TERMINAL),
                Node("m", (0.3, 0.3, 0), 0, INTERIOR),
            ),
            (Spring(("a", "m"), 1.0),),
        )
        fix = eliminate_floppy(net, 1e-4)
        assert fix.success
        assert len(fix.anchor_nodes) == 1

    def test_single_terminal_is_unfixable(self):
        net = Network(2, (Node("a", (0, 0), 0, TERMINAL), Node("m", (1, 0), 0, INTERIOR)), (Spring(("a", "m"), 1.0),))
        with pytest.raises(UnfixableFloppy):
            eliminate_floppy(net, 1e-3)

    def test_rejects_nonpositive_eps(self):
        with pytest.raises(ValueError):
            eliminate_floppy(series_chain(), 0.0)
