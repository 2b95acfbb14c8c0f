"""Realizability checks for candidate responses and their rank-one splitting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationFailed
from .model import (
    DEFAULT_TOL,
    BalancedForceSystem,
    ModalResponse,
    StaticResponse,
    check_balanced,
    rigid_motion_basis,
    symmetrize,
)


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    residual: float = 0.0
    detail: str = ""


@dataclass
class ValidationReport:
    """Per-condition outcome; ``ok`` only if every condition passed."""

    kind: str
    conditions: list = field(default_factory=list)

    def add(self, name, passed, residual=0.0, detail=""):
        self.conditions.append(Condition(name, bool(passed), float(residual), detail))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions)

    def failed(self) -> list:
        return [c.name for c in self.conditions if not c.passed]

    def __getitem__(self, name) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def raise_if_failed(self):
        if not self.ok:
            raise ValidationFailed(self)

    def lines(self) -> list:
        out = []
        for c in self.conditions:
            status = "PASS" if c.passed else "FAIL"
            line = f"{status} {c.name:<12} residual={c.residual:.3e}"
            if c.detail:
                line += f"  {c.detail}"
            out.append(line)
        return out


@dataclass(frozen=True)
class RankOneTarget:
    """``lam * f f^T``, optionally with a resonance at ``omega0_sq``."""

    lam: float
    f: np.ndarray
    omega0_sq: float | None = None

    @property
    def is_static(self) -> bool:
        return self.omega0_sq is None


def _check_static_matrix(report, prefix, positions, W, tol, scale=0.0):
    """``scale`` floors the norm used by relative tests, for matrices formed
    by cancellation of much larger terms."""
    d = positions.shape[1]
    finite = np.all(np.isfinite(W))
    report.add(prefix + "real", finite and W.shape == (positions.size,) * 2)
    if not finite:
        return
    norm = max(np.linalg.norm(W, 2), scale, 1e-300)
    asym = np.linalg.norm(W - W.T, 2) / norm
    report.add(prefix + "symmetry", asym <= tol, asym)
    lmin = float(np.linalg.eigvalsh(symmetrize(W))[0]) if W.size else 0.0
    report.add(prefix + "psd", lmin >= -tol * norm, max(0.0, -lmin / norm),
               f"min eigenvalue {lmin:.3e}")
    worst = 0.0
    bad = []
    for col in range(W.shape[1]):
        chk = check_balanced(BalancedForceSystem(positions, W[:, col].reshape(-1, d)), tol)
        # torque and force residuals relative to the column's own scale
        worst = max(worst, chk.residual / chk.scale)
        if not chk.ok:
            bad.append(col)
    detail = f"unbalanced columns {bad}" if bad else ""
    report.add(prefix + "balance", not bad, worst, detail)


def validate_static(resp: StaticResponse, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check realness, symmetry, positive semidefiniteness and balanced columns."""
    report = ValidationReport("static")
    _check_static_matrix(report, "", resp.terminal_positions, resp.matrix, tol)
    return report


def validate_modal(resp: ModalResponse, tol: float = DEFAULT_TOL) -> ValidationReport:
    report = ValidationReport("modal")
    d = resp.dimension
    M = resp.M
    diag = np.diag(M)
    offdiag = np.linalg.norm(M - np.diag(diag))
    blocks = diag.reshape(-1, d)
    spread = float(np.max(np.ptp(blocks, axis=1))) if blocks.size else 0.0
    mass_ok = offdiag == 0.0 and spread <= tol * max(1.0, float(np.max(np.abs(diag), initial=0.0)))
    mass_ok = mass_ok and bool(np.all(diag >= 0))
    report.add("masses", mass_ok, max(offdiag, spread), "M must be diag(m_i e) with m_i >= 0")

    omegas = np.array([w for w, _ in resp.terms])
    positive = bool(np.all(np.isfinite(omegas)) and np.all(omegas > 0))
    report.add("resonances", positive, float(-min(omegas.min(), 0.0)) if omegas.size else 0.0,
               "" if positive else "every omega_i^2 must be finite and > 0")
    distinct = True
    if omegas.size > 1:
        srt = np.sort(omegas)
        gaps = np.diff(srt)
        distinct = bool(np.all(gaps > 1e-8 * np.maximum(1.0, np.abs(srt[1:]))))
    report.add("distinct", distinct, 0.0, "" if distinct else "repeated resonance")

    worst_sym, worst_psd = 0.0, 0.0
    for omega_sq, C in resp.terms:
        norm = max(np.linalg.norm(C, 2), 1e-300)
        worst_sym = max(worst_sym, np.linalg.norm(C - C.T, 2) / norm)
        lmin = float(np.linalg.eigvalsh(symmetrize(C))[0])
        worst_psd = max(worst_psd, -lmin / norm)
    report.add("residue_symmetry", worst_sym <= tol, worst_sym)
    report.add("residue_psd", worst_psd <= tol, max(worst_psd, 0.0))
    a_asym = np.linalg.norm(resp.A - resp.A.T) / max(np.linalg.norm(resp.A), 1e-300)
    report.add("A_symmetry", a_asym <= tol, a_asym)
    if positive:
        # W(0) = A - sum C_i / w_i^2 may cancel to far below the size of its terms
        scale = np.linalg.norm(resp.A, 2) + sum(np.linalg.norm(C, 2) / w for w, C in resp.terms)
        _check_static_matrix(report, "W0_", resp.terminal_positions, resp.static_matrix(), tol, scale)
    return report


def _balanced_projection(positions, f):
    """Remove the rigid-motion component (pure rounding noise for valid inputs)."""
    R = rigid_motion_basis(positions)
    return f - R @ (R.T @ f)


def split_rank_one(resp: StaticResponse, tol: float = DEFAULT_TOL) -> list:
    """Spectral split ``W = sum lam_i w_i w_i^T`` over the positive eigenvalues."""
    validate_static(resp, tol).raise_if_failed()
    W = symmetrize(resp.matrix)
    if not W.size:
        return []
    lam, vecs = np.linalg.eigh(W)
    norm = np.abs(lam).max()
    pieces = []
    for k in np.argsort(-lam):
        if lam[k] <= tol * norm:
            continue
        w = _balanced_projection(resp.terminal_positions, vecs[:, k])
        w /= np.linalg.norm(w)
        pieces.append(RankOneTarget(float(lam[k]), w))
    return pieces


def _clean_static(resp: ModalResponse, tol: float) -> StaticResponse:
    """``W(0)`` with eigencomponents below the cancellation noise floor removed."""
    W0 = symmetrize(resp.static_matrix())
    scale = np.linalg.norm(resp.A, 2) + sum(np.linalg.norm(C, 2) / w for w, C in resp.terms)
    lam, vecs = np.linalg.eigh(W0) if W0.size else (np.zeros(0), W0)
    keep = lam > tol * scale
    V = np.array([_balanced_projection(resp.terminal_positions, v) for v in vecs[:, keep].T]).reshape(-1, W0.shape[0]).T
    return StaticResponse(resp.terminal_positions, symmetrize((V * lam[keep]) @ V.T))


def split_modal(resp: ModalResponse, tol: float = DEFAULT_TOL):
    """Split into ``W(0)``, terminal masses and resonant rank-one targets.

    Each residue ``C_i = sum_j lam_j c_j c_j^T`` yields targets with force
    ``sqrt(lam_j) c_j / omega_i`` and resonance ``omega_i^2``, so that
    ``W(w) = W(0) - w^2 M + sum f f^T w^2 / (w^2 - omega_i^2)``.
    """
    validate_modal(resp, tol).raise_if_failed()
    static = _clean_static(resp, tol)
    targets = []
    for omega_sq, C in resp.terms:
        lam, vecs = np.linalg.eigh(symmetrize(C))
        norm = np.abs(lam).max() if lam.size else 0.0
        for k in np.argsort(-lam):
            if lam[k] <= tol * norm:
                continue
            f = np.sqrt(lam[k] / omega_sq) * vecs[:, k]
            targets.append(RankOneTarget(1.0, f, float(omega_sq)))
    return static, resp.masses, targets


def reassemble_static(pieces, nd: int) -> np.ndarray:
    W = np.zeros((nd, nd))
    for p in pieces:
        W += p.lam * np.outer(p.f, p.f)
    return W


def reassemble_modal(static: StaticResponse, masses, targets, omega: float) -> np.ndarray:
    """Evaluate the rewritten form ``W(0) - w^2 M + sum lam f f^T w^2/(w^2 - w_i^2)``."""
    d = static.dimension
    w2 = float(omega) ** 2
    W = static.matrix - w2 * np.diag(np.repeat(masses, d))
    for t in targets:
        W = W + t.lam * np.outer(t.f, t.f) * w2 / (w2 - t.omega0_sq)
    return W
