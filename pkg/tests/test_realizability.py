import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastonet.assembly import assemble
from elastonet.errors import ValidationFailed
from elastonet.model import TERMINAL, ModalResponse, Network, Node, Spring, StaticResponse
from elastonet.random_networks import modal_from_pieces, random_network, random_static_target
from elastonet.realizability import (
    reassemble_modal,
    reassemble_static,
    split_modal,
    split_rank_one,
    validate_modal,
    validate_static,
)
from elastonet.reduce import extract_modal

from conftest import single_mass_chain

TWO = np.array([[0.0, 0.0], [1.0, 0.0]])


def single_spring_response():
    net = Network(2, (Node("a", (0, 0), 0, TERMINAL), Node("b", (1, 0), 0, TERMINAL)), (Spring(("a", "b"), 1.0),))
    return StaticResponse(net.terminal_positions, assemble(net).K)


class TestValidateStatic:
    def test_single_spring_passes(self):
        rep = validate_static(single_spring_response())
        assert rep.ok, rep.lines()

    def test_antisymmetric_perturbation_fails_symmetry(self):
        resp = single_spring_response()
        E = np.zeros((4, 4))
        E[0, 1], E[1, 0] = 0.1, -0.1
        rep = validate_static(StaticResponse(TWO, resp.matrix + E))
        assert not rep["symmetry"].passed

    def test_identity_is_unbalanced(self):
        rep = validate_static(StaticResponse(TWO, np.eye(4)))
        assert rep["symmetry"].passed and rep["psd"].passed
        assert not rep["balance"].passed
        assert rep["balance"].residual > 0

    def test_indefinite_fails_psd(self):
        rep = validate_static(StaticResponse(TWO, -single_spring_response().matrix))
        assert not rep["psd"].passed

    def test_non_finite_fails_real(self):
        W = single_spring_response().matrix.copy()
        W[0, 0] = np.nan
        assert not validate_static(StaticResponse(TWO, W))["real"].passed


class TestValidateModal:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([2, 3]))
    def test_extracted_forms_pass(self, seed, d):
        rng = np.random.default_rng(seed)
        net = random_network(rng, d, 3, 4, mass_prob=0.6, terminal_mass_prob=0.3)
        rep = validate_modal(extract_modal(net))
        assert rep.ok, rep.lines()

    def test_duplicate_resonances_fail(self):
        C = np.diag([1.0, 0.0])
        resp = ModalResponse(np.zeros((1, 2)), 2 * C, np.zeros((2, 2)), [(1.0, C), (1.0, C)])
        assert not validate_modal(resp)["distinct"].passed

    def test_indefinite_residue_fails(self):
        C = np.diag([1.0, -0.5])
        resp = ModalResponse(np.zeros((1, 2)), np.zeros((2, 2)), np.zeros((2, 2)), [(1.0, C)])
        assert not validate_modal(resp)["residue_psd"].passed

    def test_negative_resonance_fails(self):
        C = np.diag([1.0, 0.0])
        resp = ModalResponse(np.zeros((1, 2)), np.zeros((2, 2)), np.zeros((2, 2)), [(-1.0, C)])
        assert not validate_modal(resp)["resonances"].passed

    def test_mass_blocks_must_repeat(self):
        resp = ModalResponse(np.zeros((1, 2)), np.zeros((2, 2)), np.diag([1.0, 2.0]))
        assert not validate_modal(resp)["masses"].passed


class TestSplitRankOne:
    def test_rank_one_input(self, rng):
        pts = rng.normal(size=(3, 2))
        resp = random_static_target(rng, 3, rank=1)
        pieces = split_rank_one(resp)
        assert len(pieces) == 1
        np.testing.assert_allclose(reassemble_static(pieces, 6), resp.matrix, atol=1e-12)

    def test_single_spring(self):
        (piece,) = split_rank_one(single_spring_response())
        assert piece.lam == pytest.approx(2.0)
        w = np.array([-1.0, 0, 1, 0]) / np.sqrt(2)
        assert abs(piece.f @ w) == pytest.approx(1.0)

    def test_zero_matrix(self):
        assert split_rank_one(StaticResponse(TWO, np.zeros((4, 4)))) == []

    def test_invalid_input_raises(self):
        with pytest.raises(ValidationFailed):
            split_rank_one(StaticResponse(TWO, np.eye(4)))

    def test_pieces_are_balanced_and_sum_back(self, rng):
        for n in range(2, 7):
            resp = random_static_target(rng, n)
            pieces = split_rank_one(resp)
            np.testing.assert_allclose(reassemble_static(pieces, 2 * n), resp.matrix, atol=1e-10)
            for p in pieces:
                rep = validate_static(StaticResponse(resp.terminal_positions, np.outer(p.f, p.f)))
                assert rep["balance"].passed


class TestSplitModal:
    def test_no_terms(self, rng):
        resp = modal_from_pieces(rng, 3, 0)
        static, masses, targets = split_modal(resp)
        np.testing.assert_allclose(static.matrix, resp.A)
        np.testing.assert_allclose(masses, resp.masses)
        assert targets == []

    def test_pure_resonance(self):
        resp = extract_modal(single_mass_chain())
        static, masses, targets = split_modal(resp)
        assert split_rank_one(static) == []
        (t,) = targets
        assert t.omega0_sq == pytest.approx(1.0)
        assert abs(t.f[0]) == pytest.approx(1.0)

    def test_rank_two_residue(self):
        C = np.zeros((4, 4))
        C[0, 0] = C[3, 3] = 1.0
        resp = ModalResponse(TWO, C, np.zeros((4, 4)), [(1.0, C)])
        _, _, targets = split_modal(resp)
        assert len(targets) == 2
        assert {t.omega0_sq for t in targets} == {1.0}

    def test_reassembly_matches_form(self, rng):
        resp = modal_from_pieces(rng, 4, 3)
        static, masses, targets = split_modal(resp)
        for w in (0.0, 0.4, 1.7, 5.0):
            np.testing.assert_allclose(reassemble_modal(static, masses, targets, w), resp(w), atol=1e-10)
