"""Spring-mass networks with a prescribed dynamic response.

A resonant gadget adds two auxiliary nodes of equal mass to a static
rank-one network so that the terminal response becomes
``f f^T w^2 / (w^2 - w0^2)``. A full modal target is the superposition of
a static network for ``W(0)``, one resonant gadget per residue eigenpair,
and terminal masses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePlacement, NotSupported, RetryExhausted
from .model import ModalResponse, Network, wedge
from .realizability import split_modal, split_rank_one
from .reduce import dynamic_response_at, extract_modal
from .synth2d import (
    PlacementPolicy,
    SynthesisReport,
    _Builder,
    _check_planar,
    _rank_one,
    _terminals_net,
    spring_crossings,
    synth_pieces,
    terminal_labels,
)

#: reject auxiliary placements needing a force this many times larger than the target
CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class ResonantGadget:
    network: Network
    aux_forces: np.ndarray
    omega0_sq: float
    mass: float
    aux_labels: tuple


def _aux_force(x_a, x_b, X, F) -> np.ndarray:
    """Nonzero ``g`` with ``(x_b - x_a) ^ g = -sum (x_i - x_a) ^ f_i`` of minimal norm."""
    e = x_b - x_a
    rhs = -float(np.sum(wedge(X - x_a, F)))
    L2 = float(e @ e)
    g = rhs * np.array([-e[1], e[0]]) / L2
    if not np.any(g):
        # torque already balanced: any force along the pair axis keeps it so
        g = e / np.sqrt(L2)
    return g


def _place_aux(b: _Builder, X, F) -> tuple:
    fscale = max(float(np.linalg.norm(F)), 1e-300)
    margin = 0.5 * b.eps
    for _ in range(b.policy.max_retries * 4):
        x_a = b.region.sample(b.rng, margin)
        x_b = b.region.sample(b.rng, margin)
        if not (b.placer.is_free(x_a) and b.placer.is_free(x_b)):
            continue
        sep = np.linalg.norm(x_b - x_a)
        if sep < max(b.policy.min_separation, 0.05 * b.eps):
            continue
        g = _aux_force(x_a, x_b, X, F)
        if np.linalg.norm(g) > CONDITION_LIMIT * fscale:
            continue
        return x_a, x_b, g
    raise DegeneratePlacement("could not place the auxiliary masses")


def _gadget(b: _Builder, labels, X, f, omega0_sq: float) -> ResonantGadget:
    F = np.asarray(f, dtype=float).reshape(X.shape)
    last = None
    for _ in range(b.policy.max_retries):
        snap = b.placer.snapshot()
        try:
            x_a, x_b, g_b = _place_aux(b, X, F)
        except DegeneratePlacement as exc:
            last = exc
            continue
        g_a = -F.sum(axis=0) - g_b
        la, lb = b.label(), b.label()
        b.placer.occupy(x_a, la, "resonant_aux")
        b.placer.occupy(x_b, lb, "resonant_aux")
        ext_labels = list(labels) + [la, lb]
        ext_X = np.vstack([X, x_a, x_b])
        ext_F = np.vstack([F, g_a, g_b])
        try:
            static = _rank_one(b, ext_labels, ext_X, ext_F)
        except (RetryExhausted, ArithmeticError, ValueError) as exc:
            last = exc
            b.placer.rollback(snap)
            continue
        a = np.concatenate([g_a, g_b])
        mass = float(a @ a) / omega0_sq
        net = static.with_masses({la: mass, lb: mass}).demote([la, lb])
        return ResonantGadget(net, a, omega0_sq, mass, (la, lb))
    raise RetryExhausted(f"resonant gadget construction failed: {last}")


def make_resonant_gadget(positions, f, omega0_sq: float, policy: PlacementPolicy = PlacementPolicy()) -> ResonantGadget:
    """Gadget with response ``f f^T w^2 / (w^2 - omega0_sq)``; ``f`` need not be balanced."""
    if not (np.isfinite(omega0_sq) and omega0_sq > 0):
        raise ValueError("omega0_sq must be positive and finite")
    X = _check_planar(positions)
    b = _Builder(policy, X, occupied=X)
    labels = terminal_labels(len(X))
    g = _gadget(b, labels, X, f, omega0_sq)
    net = _terminals_net(labels, X).union(g.network)
    return ResonantGadget(net, g.aux_forces, g.omega0_sq, g.mass, g.aux_labels)


def probe_frequencies(resonances, count: int = 20, rel_gap: float = 0.1, include_zero: bool = True) -> np.ndarray:
    """``count`` frequencies whose squares stay ``rel_gap`` times the smallest
    resonance spacing away from every resonance.

    With ``include_zero=False`` the static point is skipped; a pure resonance
    vanishes there, so a relative error at ``omega = 0`` measures rounding only.
    """
    res = np.sort(np.asarray(resonances, dtype=float))
    if res.size == 0:
        return np.linspace(0.0 if include_zero else 3.0 / count, 3.0, count)
    pts = np.concatenate([[0.0], res])
    spacing = float(np.diff(pts).min())
    guard = rel_gap * spacing
    top = 2.0 * res[-1] + spacing
    cand = np.linspace(0.0, top, 40 * count + 1)
    ok = np.min(np.abs(cand[:, None] - res[None, :]), axis=1) >= guard
    cand = cand[ok]
    if not include_zero:
        cand = cand[cand > 0]
    pick = cand[np.linspace(0, cand.size - 1, count).round().astype(int)]
    return np.sqrt(pick)


def frequency_error(net: Network, resp: ModalResponse, omegas) -> float:
    """Largest relative spectral-norm mismatch over ``omegas``.

    Where the target nearly vanishes (``W(0) = 0`` for a pure resonance) the
    denominator is floored at ``1e-8`` times the largest target norm on the grid.
    """
    wants = [resp(w) for w in omegas]
    norms = [np.linalg.norm(W, 2) for W in wants]
    floor = max(1e-8 * max(norms, default=0.0), 1e-300)
    worst = 0.0
    for w, want, nrm in zip(omegas, wants, norms):
        got = dynamic_response_at(net, w)
        worst = max(worst, np.linalg.norm(got - want, 2) / max(nrm, floor))
    return float(worst)


def compare_modal(a: ModalResponse, b: ModalResponse) -> dict:
    """Relative differences between two modal forms with matched resonances."""
    ra, rb = a.resonances, b.resonances
    out = {"count_a": ra.size, "count_b": rb.size}
    scale = max(np.linalg.norm(a.A, 2), 1e-300)
    out["A"] = float(np.linalg.norm(a.A - b.A, 2) / scale)
    out["M"] = float(np.linalg.norm(a.M - b.M, 2) / max(np.linalg.norm(a.M, 2), 1.0))
    if ra.size != rb.size:
        out["resonance"] = np.inf
        out["residue"] = np.inf
        return out
    ia, ib = np.argsort(ra), np.argsort(rb)
    out["resonance"] = float(np.max(np.abs(ra[ia] - rb[ib]) / ra[ia])) if ra.size else 0.0
    worst = 0.0
    for i, j in zip(ia, ib):
        Ca, Cb = a.terms[i][1], b.terms[j][1]
        worst = max(worst, np.linalg.norm(Ca - Cb, 2) / max(np.linalg.norm(Ca, 2), 1e-300))
    out["residue"] = float(worst)
    return out


def synth_dynamic(resp: ModalResponse, policy: PlacementPolicy = PlacementPolicy(),
                  n_probe: int = 20) -> SynthesisReport:
    """Spring-mass network whose response function equals ``resp`` off resonance."""
    if resp.dimension != 2:
        raise NotSupported("dynamic synthesis is implemented for planar (d=2) networks only")
    X = _check_planar(resp.terminal_positions)
    static, masses, targets = split_modal(resp)
    labels = terminal_labels(len(X))
    net, b = synth_pieces(X, split_rank_one(static), policy, labels=labels)
    for k, t in enumerate(targets):
        b.prefix = f"r{k}n"
        b._count = 0
        g = _gadget(b, labels, X, t.lam**0.5 * t.f, t.omega0_sq)
        net = net.union(g.network)
    net = net.with_masses({l: float(m) for l, m in zip(labels, masses)})
    omegas = probe_frequencies(resp.resonances, n_probe)
    err = frequency_error(net, resp, omegas)
    report = SynthesisReport(net, 1.0, list(b.placer.records), err, policy.eps_hull, spring_crossings(net))
    return report


def resynthesize(net: Network, policy: PlacementPolicy = PlacementPolicy()) -> tuple:
    """Extract the modal form of ``net`` and synthesise it again."""
    modal = extract_modal(net)
    return modal, synth_dynamic(modal, policy)
