import numpy as np
import pytest

from elastonet.assembly import assemble
from elastonet.errors import DegenerateTarget, NoBalancingPoint, NotSupported, RankDeficient
from elastonet.geometry import HullNeighborhood, count_crossings
from elastonet.model import TERMINAL, Network, Node, Spring, StaticResponse, wedge
from elastonet.random_networks import random_balanced_forces, random_network, random_static_target
from elastonet.reduce import static_response
from elastonet.synth2d import (
    PlacementPolicy,
    choose_eps_noncollinear,
    find_balancing_point,
    synth_four,
    synth_pair,
    synth_rank_one,
    synth_static,
    synth_three_rank1,
    synth_three_rank2,
)

TRI = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
TRI_F = [(-1.0, -1.0), (0.0, 1.0), (1.0, 0.0)]
SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]
SQUARE_F = [(0, -1), (0, 1), (0, -1), (0, 1)]


def response_error(report, f, lam=1.0):
    W = static_response(report.network).matrix
    target = lam * np.outer(f, f)
    return np.linalg.norm(W - target, 2) / np.linalg.norm(target, 2)


def assert_inside_hull(report, positions, eps=0.5):
    region = HullNeighborhood(positions, eps)
    for node in report.network.interior:
        assert region.distance(node.position) <= eps * (1 + 1e-9), node


class TestPair:
    def test_unit_spring(self):
        net = synth_pair((0, 0), (1, 0), [-1, 0, 1, 0])
        (s,) = net.springs
        assert s.stiffness == pytest.approx(1.0)

    def test_lambda_rescales_stiffness(self):
        net = synth_pair((0, 0), (1, 0), [-1, 0, 1, 0], lam=5.0)
        assert net.springs[0].stiffness == pytest.approx(5.0)

    def test_zero_force_gives_empty_network(self):
        assert synth_pair((0, 0), (1, 0), [0, 0, 0, 0]).springs == ()

    def test_non_axial_force_rejected(self):
        with pytest.raises(DegenerateTarget):
            synth_pair((0, 0), (1, 0), [0, -1, 0, 1])


class TestChooseEps:
    def test_triangle_example(self):
        eps = choose_eps_noncollinear(*TRI, (0, 1), (1, 0))
        assert 0 < eps <= 0.5 / 1.0

    def test_scaling_forces_shrinks_eps(self):
        e1 = choose_eps_noncollinear(*TRI, (0, 1), (1, 0))
        e10 = choose_eps_noncollinear(*TRI, (0, 10), (10, 0))
        assert e10 == pytest.approx(e1 / 10, rel=1e-12)

    def test_rank_one_configuration(self):
        with pytest.raises(RankDeficient):
            choose_eps_noncollinear((0, 0), (1, 0), (2, 0), (1, 0), (-2, 0))


class TestThreeTerminals:
    def test_rank_two_triangle(self):
        rep = synth_three_rank2(*TRI, *TRI_F)
        f = np.ravel(TRI_F)
        assert response_error(rep, f) <= 1e-8
        assert rep.roundtrip_error <= 1e-8
        assert_inside_hull(rep, TRI)

    def test_rank_two_lambda_scales(self):
        f = np.ravel(TRI_F)
        W1 = static_response(synth_three_rank2(*TRI, *TRI_F).network).matrix
        W2 = static_response(synth_three_rank2(*TRI, *TRI_F, lam=2.0).network).matrix
        np.testing.assert_allclose(W2, 2 * W1, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(W1, np.outer(f, f), atol=1e-9)

    def test_permuted_terminals(self):
        perm = [2, 0, 1]
        rep = synth_three_rank2(*[TRI[i] for i in perm], *[TRI_F[i] for i in perm])
        W = static_response(rep.network).matrix
        f = np.ravel(TRI_F)
        dofs = np.ravel([[2 * i, 2 * i + 1] for i in perm])
        np.testing.assert_allclose(W, np.outer(f, f)[np.ix_(dofs, dofs)], atol=1e-9)

    def test_rank_one_collinear(self):
        pts = [(0, 0), (1, 0), (2, 0)]
        forces = [(1, 0), (1, 0), (-2, 0)]
        rep = synth_three_rank1(*pts, *forces)
        assert response_error(rep, np.ravel(forces)) <= 1e-8
        neg = synth_three_rank1(*pts, *[tuple(-np.array(f)) for f in forces])
        np.testing.assert_allclose(
            static_response(neg.network).matrix, static_response(rep.network).matrix, atol=1e-9
        )

    def test_rank_one_zero_forces(self):
        rep = synth_three_rank1((0, 0), (1, 0), (2, 0), (0, 0), (0, 0), (0, 0))
        assert rep.network.springs == ()

    def test_rank_two_rejects_rank_one_input(self):
        with pytest.raises(RankDeficient):
            synth_three_rank2((0, 0), (1, 0), (2, 0), (1, 0), (1, 0), (-2, 0))

    def test_unbalanced_rejected(self):
        with pytest.raises(DegenerateTarget):
            synth_three_rank2(*TRI, (1, 0), (0, 1), (1, 0))


class TestFour:
    def test_balancing_point_on_square(self):
        pair, y = find_balancing_point(SQUARE, SQUARE_F)
        assert pair == frozenset({0, 2})
        np.testing.assert_allclose(y, [0.5, 0.5], atol=1e-9)

    def test_couple_free_pair_gives_point_off_terminals(self):
        # f0 + f1 = 0 along the axis: the pair function vanishes identically
        pts = [(0, 0), (1, 0), (0, 1), (1, 1)]
        forces = [(-1, 0), (1, 0), (-1, 0), (1, 0)]
        pair, y = find_balancing_point(pts, forces)
        region = HullNeighborhood(pts, 0.5)
        assert region.contains(y)
        assert min(np.linalg.norm(np.array(pts) - y, axis=1)) > 1e-3

    def test_unbalanced_input(self):
        with pytest.raises(NoBalancingPoint):
            find_balancing_point(SQUARE, [(1, 0), (0, 0), (0, 0), (0, 0)])

    def test_square_synthesis(self):
        rep = synth_four(SQUARE, SQUARE_F)
        assert response_error(rep, np.ravel(SQUARE_F)) <= 1e-8
        assert_inside_hull(rep, SQUARE)

    def test_two_nonzero_blocks_reduce_to_pair(self):
        forces = [(-1, 0), (1, 0), (0, 0), (0, 0)]
        rep = synth_four(SQUARE, forces)
        assert response_error(rep, np.ravel(forces)) <= 1e-8
        touched = {lab for s in rep.network.springs for lab in s.endpoints}
        assert not touched & {"t2", "t3"}


class TestRankOne:
    @pytest.mark.parametrize("p", [2, 3, 4, 5, 6, 7, 8])
    def test_random_targets(self, p):
        rng = np.random.default_rng(100 + p)
        pts = rng.uniform(size=(p, 2))
        f = random_balanced_forces(rng, pts)
        rep = synth_rank_one(pts, f, lam=1.3)
        assert rep.roundtrip_error <= 1e-6
        assert response_error(rep, f, 1.3) <= 1e-6
        assert_inside_hull(rep, pts)

    def test_five_terminals_from_four_random_forces(self, rng):
        # draw four forces, then solve the last force and torque for balance
        pts = rng.uniform(size=(5, 2))
        F = np.zeros((5, 2))
        F[:4] = rng.normal(size=(4, 2))
        F[4] = -F[:4].sum(axis=0)
        torque = np.sum(wedge(pts, F))
        # a couple on terminals 0 and 1 along their axis has zero net force
        arm = pts[1] - pts[0]
        perp = np.array([-arm[1], arm[0]]) / (arm @ arm)
        F[0] += torque * perp
        F[1] -= torque * perp
        f = F.ravel()
        rep = synth_rank_one(pts, f)
        assert rep.roundtrip_error <= 1e-6

    def test_zero_force(self):
        rep = synth_rank_one(TRI, np.zeros(6))
        assert rep.network.springs == ()

    def test_coincident_terminals(self):
        with pytest.raises(DegenerateTarget):
            synth_rank_one([(0, 0), (0, 0), (1, 0)], np.zeros(6))

    def test_three_dimensions_not_supported(self):
        with pytest.raises(NotSupported):
            synth_rank_one([(0, 0, 0), (1, 0, 0)], np.zeros(6))

    def test_forbidden_points_avoided(self):
        rng = np.random.default_rng(7)
        pts = rng.uniform(size=(5, 2))
        f = random_balanced_forces(rng, pts)
        free = synth_rank_one(pts, f, policy=PlacementPolicy(rng_seed=1))
        bad = tuple(tuple(n.position) for n in free.network.interior)
        policy = PlacementPolicy(rng_seed=1, forbidden=bad, min_separation=1e-2)
        rep = synth_rank_one(pts, f, policy=policy)
        for node in rep.network.interior:
            assert min(np.linalg.norm(np.array(bad) - node.x, axis=1)) >= 1e-2 * (1 - 1e-9)
        assert rep.roundtrip_error <= 1e-6

    def test_deterministic_for_fixed_seed(self, rng):
        pts = rng.uniform(size=(6, 2))
        f = random_balanced_forces(rng, pts)
        a = synth_rank_one(pts, f, policy=PlacementPolicy(rng_seed=4)).network
        b = synth_rank_one(pts, f, policy=PlacementPolicy(rng_seed=4)).network
        assert a == b


class TestStatic:
    def test_known_three_terminal_network(self, rng):
        net = random_network(rng, 2, 3, 3)
        target = static_response(net)
        rep = synth_static(target)
        np.testing.assert_allclose(static_response(rep.network).matrix, target.matrix, atol=1e-8)

    def test_zero_target(self):
        rep = synth_static(StaticResponse(np.array(TRI), np.zeros((6, 6))))
        assert rep.network.springs == ()

    def test_single_spring_recovered_by_response(self):
        net = Network(2, (Node("a", (0, 0), 0, TERMINAL), Node("b", (1, 0), 0, TERMINAL)), (Spring(("a", "b"), 2.0),))
        rep = synth_static(StaticResponse(net.terminal_positions, assemble(net).K))
        np.testing.assert_allclose(static_response(rep.network).matrix, assemble(net).K, atol=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_random_targets(self, n):
        rng = np.random.default_rng(n)
        resp = random_static_target(rng, n)
        rep = synth_static(resp)
        assert rep.roundtrip_error <= 1e-6
        assert_inside_hull(rep, resp.terminal_positions)
        assert rep.crossings == count_crossings(
            [(rep.network.node(a).position, rep.network.node(b).position) for a, b in (s.endpoints for s in rep.network.springs)]
        )
