"""Perturbation stability and removal of floppy modes by weak extra springs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import NegativeStiffness, ResonanceProximity, UnfixableFloppy
from .model import INTERIOR, Network, Node, Spring
from .reduce import (
    FloppyModes,
    PINV_RCOND,
    dynamic_response_at,
    extract_modal,
    floppy_modes,
    nullspace,
    partition,
)
from .assembly import assemble
from .synth2d import PlacementPolicy


def _pair(a, b) -> tuple:
    return tuple(sorted((a, b)))


@dataclass(frozen=True)
class Perturbation:
    """Stiffness changes ``k -> k + eps*l`` and new springs of stiffness ``eps*l``."""

    scaled_springs: dict = field(default_factory=dict)
    added_springs: tuple = ()
    epsilon: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        scaled = {_pair(*k): float(v) for k, v in dict(self.scaled_springs).items()}
        added = tuple((_pair(*pair), float(l)) for pair, l in self.added_springs)
        for pair, l in added:
            if not l > 0:
                raise ValueError(f"added spring {pair} needs a positive factor")
        object.__setattr__(self, "scaled_springs", scaled)
        object.__setattr__(self, "added_springs", added)

    def with_epsilon(self, eps: float) -> "Perturbation":
        return Perturbation(self.scaled_springs, self.added_springs, eps)


def apply_perturbation(net: Network, pert: Perturbation) -> Network:
    eps = pert.epsilon
    springs = []
    for s in net.springs:
        k = s.stiffness + eps * pert.scaled_springs.get(_pair(*s.endpoints), 0.0)
        if k < 0:
            raise NegativeStiffness(f"spring {s.endpoints} would get stiffness {k:.3g}")
        springs.append(Spring(s.endpoints, k))
    for pair, l in pert.added_springs:
        for lab in pair:
            if lab not in net:
                raise ValueError(f"added spring refers to unknown node {lab!r}")
        springs.append(Spring(pair, eps * l))
    return Network(net.dimension, net.nodes, tuple(springs))


def response(net: Network, omega: float) -> np.ndarray:
    return dynamic_response_at(net, omega)


@dataclass
class StabilityReport:
    eps: np.ndarray
    errors: np.ndarray
    omegas: np.ndarray
    slope: float | None
    intercept: float | None
    residuals: np.ndarray | None

    def lines(self) -> list:
        out = [f"eps={e:.3e}  drift={d:.6e}" for e, d in zip(self.eps, self.errors)]
        if self.slope is None:
            out.append("slope undefined (need at least two epsilons)")
        else:
            out.append(f"log-log slope {self.slope:.4f}")
        return out


def _loglog_fit(eps, errors):
    if len(eps) < 2:
        return None, None, None
    x, y = np.log(eps), np.log(np.maximum(errors, 1e-300))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept), y - (slope * x + intercept)


def stability_experiment(net: Network, pert: Perturbation, eps_list, omegas) -> StabilityReport:
    """Drift ``max_w |W(w; eps) - W(w)|_2`` for each ``eps`` and its log-log slope."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    base = [response(net, w) for w in omegas]
    errors = []
    for eps in eps_list:
        moved = apply_perturbation(net, pert.with_epsilon(eps))
        errors.append(max(np.linalg.norm(response(moved, w) - W, 2) for w, W in zip(omegas, base)))
    eps = np.asarray(list(eps_list), dtype=float)
    errors = np.asarray(errors)
    slope, intercept, resid = _loglog_fit(eps, errors)
    return StabilityReport(eps, errors, omegas, slope, intercept, resid)


def _interior_block(net: Network) -> np.ndarray:
    sys = assemble(net)
    i = sys.dofs(partition(net).I)
    return sys.K[np.ix_(i, i)]


def floppy_nullspace_containment(net: Network, pert: Perturbation, tol: float = 1e-8) -> bool:
    """True if every floppy mode of the perturbed network is one of ``net``."""
    eps = pert.epsilon if pert.epsilon > 0 else 1.0
    after = nullspace(_interior_block(apply_perturbation(net, pert.with_epsilon(eps))))
    if after.shape[1] == 0:
        return True
    before = nullspace(_interior_block(net))
    if before.shape[1] == 0:
        return False
    leak = after - before @ (before.T @ after)
    return bool(np.linalg.norm(leak, 2) <= tol)


@dataclass
class FloppyFixReport:
    fixed_network: Network
    added_spring_constant: float
    anchor_nodes: tuple
    residual_drift: float
    remaining_modes: FloppyModes
    omegas: np.ndarray

    @property
    def success(self) -> bool:
        return self.remaining_modes.empty


def _affine_rank(points) -> int:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0
    diffs = pts[1:] - pts[0]
    s = np.linalg.svd(diffs, compute_uv=False)
    return int(np.sum(s > 1e-9 * max(s[0], 1e-300)))


def _anchor_nodes(net: Network, policy: PlacementPolicy) -> list:
    d = net.dimension
    X = net.terminal_positions
    rank = _affine_rank(X)
    if len(X) < 2:
        raise UnfixableFloppy("a single terminal cannot anchor the interior against rotation")
    if rank >= d:
        return []
    rng = np.random.default_rng(policy.rng_seed)
    h = policy.eps_hull / 2
    if d == 3 and rank < 2:
        raise UnfixableFloppy(
            "terminals are collinear in 3D: rotations about their common axis cannot be removed"
        )
    occupied = [n.position for n in net.nodes]
    nodes = []
    count = 2 if d == 2 else 1
    i0, i1 = 0, int(np.argmax(np.linalg.norm(X - X[0], axis=1)))
    axis = X[i1] - X[i0]
    if d == 2:
        normal = np.array([-axis[1], axis[0]]) / np.linalg.norm(axis)
    else:
        j = int(np.argmax(np.linalg.norm(np.cross(axis, X - X[0]), axis=1)))
        normal = np.cross(axis, X[j] - X[0])
        normal /= np.linalg.norm(normal)
    for k in range(count):
        for _ in range(100):
            t = rng.uniform(0.2, 0.8)
            p = X[i0] + t * axis + h * normal * (1 if k % 2 == 0 else -1)
            if min(np.linalg.norm(np.asarray(occupied) - p, axis=1)) > policy.min_separation:
                break
        label = f"anchor{k}"
        while label in net:
            label += "_"
        nodes.append(Node(label, tuple(p), 0.0, INTERIOR))
        occupied.append(tuple(p))
    return nodes


def drift_grid(*nets, count: int = 16, avoid=()) -> np.ndarray:
    """Log-spaced frequencies around the resonance scale of ``nets``, nudged
    off every resonance of ``nets`` and ``avoid``.

    Networks in ``avoid`` do not move the grid, so drifts measured for several
    perturbation sizes share the same frequencies.
    """
    own = np.concatenate([extract_modal(n).resonances for n in nets])
    ref = float(np.exp(np.mean(np.log(np.sqrt(own))))) if own.size else 1.0
    res = np.concatenate([own] + [extract_modal(n).resonances for n in avoid])
    grid = ref * np.logspace(-1, 1, count)
    out = []
    for w in grid:
        for _ in range(50):
            if res.size == 0 or np.min(np.abs(w * w - res) / res) > 0.05:
                break
            w *= 1.07
        out.append(w)
    return np.array(out)


def max_drift(a: Network, b: Network, omegas) -> float:
    worst = 0.0
    for w in omegas:
        try:
            worst = max(worst, np.linalg.norm(response(a, w) - response(b, w), 2))
        except ResonanceProximity:
            continue
    return float(worst)


def eliminate_floppy(net: Network, eps_k: float, policy: PlacementPolicy = PlacementPolicy()) -> FloppyFixReport:
    """Connect every node pair with a spring of stiffness ``eps_k``.

    If the terminals alone cannot pin the interior (collinear terminals in
    2D, coplanar in 3D) weakly attached anchor nodes are added first.
    """
    if not eps_k > 0:
        raise ValueError("eps_k must be positive")
    anchors = _anchor_nodes(net, policy)
    grown = net.with_nodes(anchors)
    have = {s.key for s in grown.springs}
    extra = [
        Spring((a.label, b.label), eps_k)
        for a, b in itertools.combinations(grown.nodes, 2)
        if frozenset((a.label, b.label)) not in have
    ]
    fixed = grown.with_springs(extra)
    remaining = floppy_modes(fixed, PINV_RCOND)
    # the grid follows the original network; weak springs add soft modes near 0
    omegas = np.concatenate([[0.0], drift_grid(net, avoid=(fixed,))])
    drift = max_drift(fixed, net, omegas)
    return FloppyFixReport(fixed, eps_k, tuple(n.label for n in anchors), drift, remaining, omegas)
