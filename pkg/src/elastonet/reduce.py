"""Elimination of interior nodes: static and dynamic terminal responses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import AssembledSystem, assemble
from .errors import ResonanceProximity
from .model import RESONANCE_GUARD, ModalResponse, Network, StaticResponse, symmetrize

#: singular values below this fraction of the largest are treated as zero
PINV_RCOND = 1e-10
#: eigenvalues closer than this (relative to max(1, w^2)) form one resonance
CLUSTER_TOL = 1e-8
#: modes whose terminal coupling is below this fraction of the coupling norm are dropped
RESIDUE_TOL = 1e-9
#: a Schur complement this small relative to its kept block is exactly zero
SCHUR_ZERO_TOL = 1e-12


def pseudo_inverse(a: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Moore-Penrose inverse through an SVD with a relative rank cutoff."""
    if a.size == 0:
        return a.T.copy()
    u, s, vt = np.linalg.svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.T.shape)
    keep = s > rcond * s[0]
    return (vt[keep].T / s[keep]) @ u[:, keep].T


def nullspace(a: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical nullspace of a square matrix."""
    n = a.shape[1]
    if n == 0:
        return np.zeros((0, 0))
    _, s, vt = np.linalg.svd(a)
    if s[0] == 0.0:
        return np.eye(n)
    rank = int(np.sum(s > rcond * s[0]))
    return vt[rank:].T.copy()


def schur_complement(a: np.ndarray, keep: np.ndarray, drop: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """``A_kk - A_kd A_dd^+ A_dk`` with the pseudo-inverse."""
    akk = a[np.ix_(keep, keep)]
    if drop.size == 0:
        return symmetrize(akk)
    akd = a[np.ix_(keep, drop)]
    add = a[np.ix_(drop, drop)]
    out = symmetrize(akk - akd @ pseudo_inverse(add, rcond) @ akd.T)
    # complete cancellation (e.g. a floppy chain) leaves pure rounding noise
    if out.size and np.linalg.norm(out, 2) <= SCHUR_ZERO_TOL * np.linalg.norm(akk, 2):
        return np.zeros_like(out)
    return out


@dataclass(frozen=True)
class Partition:
    B: tuple
    I: tuple
    J: tuple
    L: tuple


def partition(net: Network) -> Partition:
    B = tuple(n.label for n in net.terminals)
    inner = net.interior
    J = tuple(n.label for n in inner if n.mass > 0)
    L = tuple(n.label for n in inner if n.mass == 0)
    return Partition(B, tuple(n.label for n in inner), J, L)


@dataclass(frozen=True)
class FloppyModes:
    basis: np.ndarray
    tol: float
    interior: tuple
    dimension: int
    residual: float = 0.0

    @property
    def count(self) -> int:
        return self.basis.shape[1] if self.basis.ndim == 2 else 0

    @property
    def empty(self) -> bool:
        return self.count == 0

    def displacements(self, k: int) -> dict:
        """Mode ``k`` as a mapping interior label -> displacement vector."""
        v = self.basis[:, k].reshape(-1, self.dimension)
        return {lab: v[i] for i, lab in enumerate(self.interior)}


def _blocks(net: Network, sys: AssembledSystem | None = None):
    sys = sys or assemble(net)
    part = partition(net)
    return sys, part, sys.dofs(part.B), sys.dofs(part.I)


def static_response(net: Network) -> StaticResponse:
    sys, _, b, i = _blocks(net)
    W = schur_complement(sys.K, b, i)
    return StaticResponse(net.terminal_positions, W)


def interior_minimizer(net: Network, u_B) -> np.ndarray:
    """Interior displacement ``-A_II^+ A_IB u_B`` that minimises the stored energy."""
    sys, _, b, i = _blocks(net)
    A_II = sys.K[np.ix_(i, i)]
    A_IB = sys.K[np.ix_(i, b)]
    return -pseudo_inverse(A_II) @ (A_IB @ np.asarray(u_B, dtype=float))


def range_containment_residual(net: Network) -> float:
    """``|(I - P) A_IB| / |A_IB|`` with ``P`` the projector onto range(A_II)."""
    sys, _, b, i = _blocks(net)
    if i.size == 0:
        return 0.0
    A_II = sys.K[np.ix_(i, i)]
    A_IB = sys.K[np.ix_(i, b)]
    norm = np.linalg.norm(A_IB, 2)
    if norm == 0.0:
        return 0.0
    null = nullspace(A_II)
    if null.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(null.T @ A_IB, 2) / norm)


def floppy_modes(net: Network, tol: float = PINV_RCOND) -> FloppyModes:
    sys, part, b, i = _blocks(net)
    d = net.dimension
    if i.size == 0:
        return FloppyModes(np.zeros((0, 0)), tol, (), d)
    A_II = sys.K[np.ix_(i, i)]
    basis = nullspace(A_II, tol)
    residual = 0.0
    if basis.shape[1]:
        # with terminals clamped, each mode must leave every spring unstretched
        full = np.zeros((sys.K.shape[0], basis.shape[1]))
        full[i] = basis
        disp = full.reshape(len(net.nodes), d, -1)
        for s in net.springs:
            p, q = net.index(s.endpoints[0]), net.index(s.endpoints[1])
            axis = np.asarray(net.nodes[q].position) - np.asarray(net.nodes[p].position)
            elong = axis @ (disp[q] - disp[p]) / np.linalg.norm(axis)
            if s.stiffness > 0:
                residual = max(residual, float(np.max(np.abs(elong))))
    return FloppyModes(basis, tol, part.I, d, residual)


@dataclass(frozen=True)
class Condensed:
    """Massless interior eliminated: stiffness on ``B + J`` and the mass split."""

    K: np.ndarray
    nb: int
    m_B: np.ndarray
    m_J: np.ndarray

    @property
    def K_BB(self):
        return self.K[: self.nb, : self.nb]

    @property
    def K_BJ(self):
        return self.K[: self.nb, self.nb :]

    @property
    def K_JJ(self):
        return self.K[self.nb :, self.nb :]


def condense_massless(net: Network) -> Condensed:
    sys = assemble(net)
    part = partition(net)
    b = sys.dofs(part.B)
    j = sys.dofs(part.J)
    keep = np.concatenate([b, j])
    Kt = schur_complement(sys.K, keep, sys.dofs(part.L))
    masses = np.diag(sys.M_full)
    return Condensed(Kt, b.size, masses[b], masses[j])


@dataclass(frozen=True)
class _Modes:
    mu: np.ndarray
    residues: np.ndarray  # columns c~_j = K_BJ M_JJ^{-1/2} c_j
    coupled: np.ndarray  # boolean mask


def _modes(c: Condensed) -> _Modes:
    if c.m_J.size == 0:
        return _Modes(np.zeros(0), np.zeros((c.nb, 0)), np.zeros(0, dtype=bool))
    s = 1.0 / np.sqrt(c.m_J)
    C = symmetrize(s[:, None] * c.K_JJ * s[None, :])
    mu, vecs = np.linalg.eigh(C)
    coupling = c.K_BJ * s[None, :]
    residues = coupling @ vecs
    scale = np.linalg.norm(coupling, 2) if coupling.size else 0.0
    top = max(float(mu[-1]), 0.0)
    coupled = (np.linalg.norm(residues, axis=0) > RESIDUE_TOL * scale) & (mu > PINV_RCOND * top)
    return _Modes(mu, residues, coupled)


def resonance_guard(omega_sq_max: float) -> float:
    return RESONANCE_GUARD * max(1.0, omega_sq_max)


def dynamic_response_at(net: Network, omega: float) -> np.ndarray:
    """Terminal response at one frequency by direct elimination.

    Interior modes that do not couple to the terminals (floppy modes and the
    like) never produce a pole; if ``omega**2`` hits one of them the
    pseudo-inverse is used, which is the continuous extension.
    """
    c = condense_massless(net)
    w2 = float(omega) ** 2
    base = c.K_BB - w2 * np.diag(c.m_B)
    if c.m_J.size == 0:
        return symmetrize(base)
    modes = _modes(c)
    top = float(modes.mu[modes.coupled].max()) if modes.coupled.any() else 0.0
    guard = resonance_guard(top)
    near = np.abs(modes.mu - w2) < guard
    if np.any(near & modes.coupled):
        hit = modes.mu[near & modes.coupled][0]
        raise ResonanceProximity(w2, float(hit), guard)
    S = c.K_JJ - w2 * np.diag(c.m_J)
    if np.any(near):
        X = pseudo_inverse(S) @ c.K_BJ.T
    else:
        X = np.linalg.solve(S, c.K_BJ.T)
    return symmetrize(base - c.K_BJ @ X)


def extract_modal(net: Network) -> ModalResponse:
    c = condense_massless(net)
    positions = net.terminal_positions
    M = np.diag(c.m_B)
    modes = _modes(c)
    order = np.argsort(modes.mu)
    terms = []
    group: list = []
    for j in order:
        if not modes.coupled[j]:
            continue
        mu = float(modes.mu[j])
        if group and mu - modes.mu[group[0]] > CLUSTER_TOL * max(1.0, mu):
            terms.append(_cluster_term(modes, group))
            group = []
        group.append(j)
    if group:
        terms.append(_cluster_term(modes, group))
    return ModalResponse(positions, symmetrize(c.K_BB), M, tuple(terms))


def _cluster_term(modes: _Modes, group: list) -> tuple:
    omega_sq = float(np.mean(modes.mu[group]))
    vecs = modes.residues[:, group]
    return omega_sq, symmetrize(vecs @ vecs.T)
