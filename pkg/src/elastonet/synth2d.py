"""Planar spring networks with a prescribed static response.

Every balanced rank-one target ``lam f f^T`` is realised by a small gadget
(single spring, the five-spring triangle, or a composition of gadgets that
share an auxiliary node), and a general static response is realised as the
superposition of one gadget per positive eigenpair.

Gadget spring constants start at 1 and are fixed afterwards by a single
forward solve: the built response is checked to be ``c f f^T`` and all
stiffnesses are divided by ``c``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateTarget,
    DimensionMismatch,
    GadgetVerificationFailed,
    NoBalancingPoint,
    NotSupported,
    RankDeficient,
    RetryExhausted,
)
from .geometry import HullNeighborhood, Placer, count_crossings
from .model import (
    DEFAULT_TOL,
    TERMINAL,
    BalancedForceSystem,
    Network,
    Node,
    Spring,
    StaticResponse,
    check_balanced,
    wedge,
)
from .realizability import split_rank_one
from .reduce import static_response

log = logging.getLogger(__name__)

RANK_TOL = 1e-9
#: accepted deviation of a built gadget from exact proportionality to f f^T
GADGET_TOL = 1e-8
#: |det| of the gadget triangle relative to its side lengths must exceed this
COLLINEAR_TOL = 1e-6


@dataclass(frozen=True)
class PlacementPolicy:
    eps_hull: float = 0.5
    forbidden: tuple = ()
    rng_seed: int = 0
    min_separation: float = 1e-3
    max_retries: int = 64

    def __post_init__(self):
        if not self.eps_hull > 0:
            raise ValueError("eps_hull must be positive")
        if not 0 <= self.min_separation < self.eps_hull:
            raise ValueError("min_separation must lie in [0, eps_hull)")


@dataclass
class SynthesisReport:
    network: Network
    calibration: float
    placed_nodes: list
    roundtrip_error: float
    eps_hull: float = 0.5
    crossings: int = 0
    target: np.ndarray | None = field(default=None, repr=False)

    @property
    def node_count(self) -> int:
        return len(self.network.nodes)

    def summary(self) -> dict:
        return {
            "nodes": self.node_count,
            "interior_nodes": len(self.network.interior),
            "springs": len(self.network.springs),
            "crossings": self.crossings,
            "eps_hull": self.eps_hull,
            "calibration": self.calibration,
            "roundtrip_error": self.roundtrip_error,
        }


def spring_crossings(net: Network) -> int:
    segs = [(net.node(a).position, net.node(b).position) for a, b in (s.endpoints for s in net.springs)]
    return count_crossings(segs)


# ---------------------------------------------------------------------------
# internal builder


class _Builder:
    """Shared state of one synthesis run: rng, placement bookkeeping, labels."""

    def __init__(self, policy: PlacementPolicy, reference_points, occupied=(), prefix="n"):
        self.policy = policy
        self.rng = np.random.default_rng(policy.rng_seed)
        region = HullNeighborhood(reference_points, policy.eps_hull)
        self.placer = Placer(region, policy.min_separation, self.rng)
        for p in list(policy.forbidden) + list(occupied):
            self.placer.occupy(p)
        self.prefix = prefix
        self._count = 0

    def label(self) -> str:
        self._count += 1
        return f"{self.prefix}{self._count}"

    @property
    def eps(self) -> float:
        return self.policy.eps_hull

    @property
    def region(self) -> HullNeighborhood:
        return self.placer.region


def _terminals_net(labels, X) -> Network:
    nodes = tuple(Node(l, tuple(x), kind=TERMINAL) for l, x in zip(labels, X))
    return Network(2, nodes)


def _calibrate(net: Network, labels, F, coeff: float = 1.0) -> tuple:
    """Scale ``net`` so its response on ``labels`` equals ``coeff * f f^T``."""
    W_full = static_response(net).matrix
    term_labels = [n.label for n in net.terminals]
    pos = [term_labels.index(l) for l in labels]
    idx = np.array([2 * p + a for p in pos for a in range(2)])
    W = W_full[np.ix_(idx, idx)]
    f = np.asarray(F, dtype=float).ravel()
    ff = float(f @ f)
    c = float(f @ W @ f) / (ff * ff)
    dev = np.linalg.norm(W - c * np.outer(f, f), 2)
    scale = max(np.linalg.norm(W, 2), abs(c) * ff)
    if not c > 0 or dev > GADGET_TOL * scale:
        raise GadgetVerificationFailed(
            f"gadget response is not proportional to f f^T (c={c:.3e}, deviation={dev / max(scale, 1e-300):.3e})"
        )
    return net.scaled(coeff / c), coeff / c


def _nonzero(F) -> np.ndarray:
    norms = np.linalg.norm(F, axis=1)
    top = norms.max() if norms.size else 0.0
    return norms > 1e-12 * top if top > 0 else np.zeros(len(F), dtype=bool)


def _rank(F, X) -> int:
    """Numerical rank of ``[f_1, f_2, x_1 - x_0, x_2 - x_0]``."""
    mat = np.column_stack([F[1], F[2], X[1] - X[0], X[2] - X[0]])
    mat = mat / np.maximum(np.linalg.norm(mat, axis=0), 1e-300)
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > RANK_TOL * s[0]))


def _rank_one(b: _Builder, labels, X, F, depth: int = 0) -> Network:
    """Network on ``labels`` whose response is exactly ``f f^T`` (unit coefficient)."""
    X = np.asarray(X, dtype=float)
    F = np.asarray(F, dtype=float).reshape(X.shape)
    base = _terminals_net(labels, X)
    nz = _nonzero(F)
    p = int(nz.sum())
    if p == 0:
        return base
    if p == 1:
        raise DegenerateTarget("a single nonzero force cannot be balanced")
    sel = np.flatnonzero(nz)
    sl = [labels[i] for i in sel]
    Xs, Fs = X[sel], F[sel]
    if p == 2:
        net = _pair(sl, Xs, Fs)
    elif p == 3:
        if _rank(Fs, Xs) >= 2:
            net = _three_rank2(b, sl, Xs, Fs)
        else:
            net = _three_rank1(b, sl, Xs, Fs, depth)
    elif p == 4:
        net = _four(b, sl, Xs, Fs, depth)
    else:
        net = _induction(b, sl, Xs, Fs, depth)
    return base.union(net)


def _pair(labels, X, F) -> Network:
    axis = X[1] - X[0]
    length = np.linalg.norm(axis)
    if length == 0.0:
        raise DegenerateTarget("coincident terminals")
    n = axis / length
    f1 = F[0]
    if abs(float(wedge(f1, n))) > 1e-9 * np.linalg.norm(f1) or np.linalg.norm(F[0] + F[1]) > 1e-9 * np.linalg.norm(f1):
        raise DegenerateTarget("two-terminal target needs opposite forces along the spring axis")
    k = float(f1 @ f1)
    return _terminals_net(labels, X).with_springs([Spring((labels[0], labels[1]), k)])


def _pick_apex(X, F) -> tuple:
    """Ordering ``(o, a, c)`` with ``f_a ^ (x_a - x_o)`` as far from zero as possible."""
    best, best_val = None, -1.0
    for o, a, c in itertools.permutations(range(3)):
        arm = X[a] - X[o]
        val = abs(float(wedge(F[a], arm))) / (np.linalg.norm(F[a]) * np.linalg.norm(arm))
        if val > best_val:
            best, best_val = (o, a, c), val
    if best_val <= RANK_TOL:
        raise RankDeficient("no terminal force has a lever arm about another terminal")
    return best


def _eps_candidates(b: _Builder, X, F):
    norms = np.linalg.norm(F[1:3], axis=1)
    fmax, fmin = float(norms.max()), float(norms.min())
    gaps = [np.linalg.norm(X[i] - X[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    start = min(0.5 * b.eps, 0.5 * min(gaps)) / fmax
    # below this the weaker force leaves its moved point on top of its terminal
    floor = 2.0 * b.policy.min_separation / fmin if fmin > 0 else 0.0
    for k in range(b.policy.max_retries):
        eps = start * 0.7**k * b.rng.uniform(0.8, 1.0)
        if eps < floor:
            break
        yield eps
    if floor > start:
        top = 0.5 * b.eps / fmax
        for eps in np.geomspace(floor, max(top, floor), b.policy.max_retries):
            yield eps * b.rng.uniform(1.0, 1.1)


def _eps_ok(b: _Builder, x0, x1p, x2p) -> bool:
    if not (b.placer.is_free(x1p) and b.placer.is_free(x2p)):
        return False
    if np.linalg.norm(x1p - x2p) < b.policy.min_separation:
        return False
    u, v = x1p - x0, x2p - x0
    return abs(float(wedge(u, v))) > COLLINEAR_TOL * np.linalg.norm(u) * np.linalg.norm(v)


def _choose_eps(b: _Builder, X, F) -> float:
    """First epsilon for which the moved points form a proper triangle with ``x0``."""
    for eps in _eps_candidates(b, X, F):
        if _eps_ok(b, X[0], X[1] + eps * F[1], X[2] + eps * F[2]):
            return eps
    raise RetryExhausted("no admissible epsilon for the three-terminal gadget")


def _three_rank2(b: _Builder, labels, X, F) -> Network:
    o, a, c = _pick_apex(X, F)
    Xp, Fp = X[[o, a, c]], F[[o, a, c]]
    lo, la, lc = labels[o], labels[a], labels[c]
    last_err = None
    for eps in _eps_candidates(b, Xp, Fp):
        x1p, x2p = Xp[1] + eps * Fp[1], Xp[2] + eps * Fp[2]
        if not _eps_ok(b, Xp[0], x1p, x2p):
            continue
        m1, m2 = b.label(), b.label()
        nodes = [Node(l, tuple(x), kind=TERMINAL) for l, x in zip((lo, la, lc), Xp)]
        nodes += [Node(m1, tuple(x1p)), Node(m2, tuple(x2p))]
        springs = [Spring((lo, m1), 1.0), Spring((lo, m2), 1.0), Spring((la, m1), 1.0),
                   Spring((lc, m2), 1.0), Spring((m1, m2), 1.0)]
        net = Network(2, tuple(nodes), tuple(springs))
        try:
            net, _ = _calibrate(net, [lo, la, lc], Fp)
        except GadgetVerificationFailed as exc:
            last_err = exc
            continue
        b.placer.occupy(x1p, m1, "three_rank2")
        b.placer.occupy(x2p, m2, "three_rank2")
        return net
    raise RetryExhausted(f"three-terminal gadget failed for every epsilon ({last_err})")


def _sample_generic(b: _Builder, X, off_line: bool) -> np.ndarray:
    """A free point near the terminals; off their common line if requested."""
    scale = max(b.region.diameter, 1e-12)
    for _ in range(b.policy.max_retries * 4):
        if off_line:
            i, j = np.unravel_index(np.argmax(np.linalg.norm(X[:, None] - X[None], axis=-1)), (len(X), len(X)))
            seg = X[j] - X[i]
            L = np.linalg.norm(seg)
            normal = np.array([-seg[1], seg[0]]) / L
            h = b.rng.uniform(0.1, 0.45) * min(b.eps, L) * b.rng.choice([-1.0, 1.0])
            y = X[i] + b.rng.uniform(0.1, 0.9) * seg + h * normal
        else:
            y = b.region.sample(b.rng, 0.25 * min(b.eps, scale))
        if b.placer.is_free(y):
            return y
    raise RetryExhausted("could not place an auxiliary node")


def _torque_solution(b: _Builder, arm, rhs: float, scale: float) -> np.ndarray:
    """A generic ``f`` with ``arm ^ f = rhs``: minimal-norm part plus a random multiple of ``arm``."""
    L2 = float(arm @ arm)
    perp = np.array([-arm[1], arm[0]])
    f = rhs * perp / L2
    return f + b.rng.uniform(-1.0, 1.0) * scale * arm / np.sqrt(L2)


def _join(b: _Builder, y_label, parts) -> Network:
    net = parts[0].union(*parts[1:])
    return net.demote([y_label])


def _three_rank1(b: _Builder, labels, X, F, depth) -> Network:
    last = None
    for _ in range(b.policy.max_retries):
        snap = b.placer.snapshot()
        y = _sample_generic(b, X, off_line=True)
        yl = b.label()
        b.placer.occupy(y, yl, "three_rank1")
        arm = y - X[0]
        rhs = float(wedge(X[2] - X[0], F[2]))
        f = _torque_solution(b, arm, rhs, np.linalg.norm(F).max() if F.size else 1.0)
        fam1 = ([yl, labels[0], labels[1]], np.array([y, X[0], X[1]]), np.array([f, F[0] + F[2] - f, F[1]]))
        fam2 = ([yl, labels[0], labels[2]], np.array([y, X[0], X[2]]), np.array([-f, f - F[2], F[2]]))
        try:
            parts = [_rank_one(b, *fam, depth=depth + 1) for fam in (fam1, fam2)]
            net = _join(b, yl, parts)
            return _calibrate(net, labels, F)[0]
        except (GadgetVerificationFailed, RankDeficient, RetryExhausted, DegenerateTarget) as exc:
            last = exc
            b.placer.rollback(snap)
    raise RetryExhausted(f"collinear three-terminal construction failed: {last}")


def _pair_lines(X, F):
    """Zero sets of ``f_ij(y) = f_i^x_i + f_j^x_j - (f_i+f_j)^y`` for all six pairs."""
    scale = max(np.linalg.norm(F, axis=1).max(), 1e-300) * max(1.0, np.abs(X).max())
    out = []
    for i, j in itertools.combinations(range(4), 2):
        g = F[i] + F[j]
        c = float(wedge(F[i], X[i]) + wedge(F[j], X[j]))
        if np.linalg.norm(g) <= 1e-12 * scale:
            out.append(((i, j), None, c, abs(c) <= 1e-12 * scale))
        else:
            y0 = c * np.array([-g[1], g[0]]) / float(g @ g)
            out.append(((i, j), (y0, g), c, False))
    return out


def _balancing_point(b: _Builder, X, F, allow_degenerate=True):
    chk = check_balanced(BalancedForceSystem(X, F))
    if not chk.ok:
        raise NoBalancingPoint("four-force system is not balanced")
    candidates = []
    degenerate = []
    for pair, line, c, identically_zero in _pair_lines(X, F):
        if line is None:
            if identically_zero:
                degenerate.append(pair)
            continue
        y0, g = line
        sec = b.region.line_section(y0, g)
        if sec is None:
            continue
        lo, hi = sec
        candidates.append((-float(np.linalg.norm(hi - lo)), pair, lo, hi))
    candidates.sort(key=lambda t: t[0])
    for _, pair, lo, hi in candidates:
        mid = 0.5 * (lo + hi)
        if b.placer.is_free(mid):
            return pair, mid
        for _ in range(b.policy.max_retries):
            y = lo + b.rng.uniform(0.02, 0.98) * (hi - lo)
            if b.placer.is_free(y):
                return pair, y
    if allow_degenerate and degenerate:
        return degenerate[0], _sample_generic(b, X, off_line=False)
    raise NoBalancingPoint("no pair of forces has a balancing point in the hull neighbourhood")


def _four(b: _Builder, labels, X, F, depth) -> Network:
    try:
        (i, j), y = _balancing_point(b, X, F, allow_degenerate=False)
    except NoBalancingPoint:
        if not check_balanced(BalancedForceSystem(X, F)).ok:
            raise
        # only couple-free pairs exist: split through a generic node instead
        return _induction(b, labels, X, F, depth, r=2)
    k, t = sorted(set(range(4)) - {i, j})
    g = F[i] + F[j]
    last = None
    for _ in range(b.policy.max_retries):
        snap = b.placer.snapshot()
        yl = b.label()
        b.placer.occupy(y, yl, "four_split")
        fam1 = ([yl, labels[i], labels[j]], np.array([y, X[i], X[j]]), np.array([-g, F[i], F[j]]))
        fam2 = ([yl, labels[k], labels[t]], np.array([y, X[k], X[t]]), np.array([g, F[k], F[t]]))
        try:
            parts = [_rank_one(b, *fam, depth=depth + 1) for fam in (fam1, fam2)]
            return _calibrate(_join(b, yl, parts), labels, F)[0]
        except (GadgetVerificationFailed, RankDeficient, RetryExhausted, DegenerateTarget) as exc:
            last = exc
            b.placer.rollback(snap)
            (i, j), y = _balancing_point(b, X, F, allow_degenerate=False)
            k, t = sorted(set(range(4)) - {i, j})
            g = F[i] + F[j]
    raise RetryExhausted(f"four-terminal construction failed: {last}")


def _induction(b: _Builder, labels, X, F, depth, r=None) -> Network:
    """Split through a generic node ``y`` into terminals ``[0, r)`` and ``{0} + [r, p)``.

    Both families are balanced: ``f`` at ``y`` solves the torque equation of
    the first family about ``x_0`` and ``f'`` closes its force balance.
    """
    p = len(labels)
    r = p // 2 + 1 if r is None else r
    if depth > 12:
        raise RetryExhausted("recursion depth exceeded")
    last = None
    fscale = np.linalg.norm(F, axis=1).max()
    for _ in range(b.policy.max_retries):
        snap = b.placer.snapshot()
        y = _sample_generic(b, X, off_line=False)
        yl = b.label()
        b.placer.occupy(y, yl, "induction_split")
        arm = y - X[0]
        rhs = -float(sum(wedge(X[i] - X[0], F[i]) for i in range(1, r)))
        f = _torque_solution(b, arm, rhs, fscale)
        fprime = -(f + F[:r].sum(axis=0))
        F1 = np.vstack([f, F[0] + fprime, F[1:r]])
        X1 = np.vstack([y, X[:r]])
        F2 = np.vstack([-f, -fprime, F[r:]])
        X2 = np.vstack([y, X[0], X[r:]])
        try:
            parts = [
                _rank_one(b, [yl] + list(labels[:r]), X1, F1, depth + 1),
                _rank_one(b, [yl, labels[0]] + list(labels[r:]), X2, F2, depth + 1),
            ]
            return _calibrate(_join(b, yl, parts), labels, F)[0]
        except (GadgetVerificationFailed, RankDeficient, RetryExhausted, DegenerateTarget) as exc:
            last = exc
            b.placer.rollback(snap)
    raise RetryExhausted(f"splitting a {p}-terminal target failed: {last}")


# ---------------------------------------------------------------------------
# public API


def _check_planar(positions) -> np.ndarray:
    X = np.atleast_2d(np.asarray(positions, dtype=float))
    if X.shape[1] == 3:
        raise NotSupported("synthesis is implemented for planar (d=2) networks only")
    if X.shape[1] != 2:
        raise DimensionMismatch(f"expected planar positions, got shape {X.shape}")
    if len(X) > 1:
        gaps = np.linalg.norm(X[:, None] - X[None], axis=-1) + np.eye(len(X))
        if gaps.min() == 0.0:
            raise DegenerateTarget("coincident terminal positions")
    return X


def terminal_labels(n: int) -> list:
    return [f"t{i}" for i in range(n)]


def _report(net, target, placed, calibration, policy) -> SynthesisReport:
    W = static_response(net).matrix
    scale = np.linalg.norm(target, 2)
    err = float(np.linalg.norm(W - target, 2) / (scale if scale > 0 else 1.0))
    return SynthesisReport(net, calibration, placed, err, policy.eps_hull, spring_crossings(net), target)


def synth_pair(x1, x2, f, lam: float = 1.0) -> Network:
    """Single spring with response ``lam f f^T`` for opposite forces along ``x2 - x1``."""
    X = _check_planar([x1, x2])
    F = np.asarray(f, dtype=float).reshape(2, 2)
    labels = terminal_labels(2)
    if not _nonzero(F).any():
        return _terminals_net(labels, X)
    return _pair(labels, X, F).scaled(lam)


def choose_eps_noncollinear(x0, x1, x2, f1, f2, policy: PlacementPolicy = PlacementPolicy()) -> float:
    """Epsilon such that ``x0, x1 + eps f1, x2 + eps f2`` are safely non-collinear."""
    X = _check_planar([x0, x1, x2])
    F = np.array([-(np.asarray(f1) + np.asarray(f2)), f1, f2], dtype=float)
    if _rank(F, X) < 2:
        raise RankDeficient("rank[f1, f2, x1 - x0, x2 - x0] < 2")
    b = _Builder(policy, X, occupied=X)
    return _choose_eps(b, X, F)


def _run(positions, F, lam, policy, kind):
    X = _check_planar(positions)
    F = np.asarray(F, dtype=float).reshape(X.shape)
    chk = check_balanced(BalancedForceSystem(X, F))
    if not chk.ok:
        raise DegenerateTarget(f"forces are not balanced (residual {chk.residual:.3e})")
    labels = terminal_labels(len(X))
    b = _Builder(policy, X, occupied=X)
    f = F.ravel()
    target = lam * np.outer(f, f)
    if not _nonzero(F).any():
        net = _terminals_net(labels, X)
        return _report(net, target, [], 0.0, policy)
    if kind == "rank2":
        if _rank(F, X) < 2:
            raise RankDeficient("rank[f1, f2, x1 - x0, x2 - x0] < 2")
        net = _three_rank2(b, labels, X, F)
    elif kind == "rank1":
        if _rank(F, X) != 1:
            raise DegenerateTarget("collinear construction needs rank[f1, f2, x1 - x0, x2 - x0] = 1")
        net = _three_rank1(b, labels, X, F, 0)
    elif kind == "four":
        net = _four(b, labels, X, F, 0)
    else:
        net = _rank_one(b, labels, X, F)
    net = _terminals_net(labels, X).union(net).scaled(lam)
    return _report(net, target, list(b.placer.records), lam, policy)


def synth_three_rank2(x0, x1, x2, f0, f1, f2, lam=1.0, policy=PlacementPolicy()) -> SynthesisReport:
    return _run([x0, x1, x2], [f0, f1, f2], lam, policy, "rank2")


def synth_three_rank1(x0, x1, x2, f0, f1, f2, lam=1.0, policy=PlacementPolicy()) -> SynthesisReport:
    return _run([x0, x1, x2], [f0, f1, f2], lam, policy, "rank1")


def find_balancing_point(positions, forces, policy: PlacementPolicy = PlacementPolicy()):
    """Pair ``{i, j}`` and a point ``y`` where ``f_i, f_j, -(f_i + f_j)`` balance."""
    X = _check_planar(positions)
    F = np.asarray(forces, dtype=float).reshape(4, 2)
    b = _Builder(policy, X, occupied=X)
    pair, y = _balancing_point(b, X, F)
    return frozenset(pair), y


def synth_four(positions, forces, lam=1.0, policy=PlacementPolicy()) -> SynthesisReport:
    X = _check_planar(positions)
    if len(X) != 4:
        raise DimensionMismatch("synth_four needs four terminals")
    return _run(X, forces, lam, policy, "four")


def synth_rank_one(positions, f, lam=1.0, policy=PlacementPolicy()) -> SynthesisReport:
    """Network with static response ``lam f f^T`` for a balanced planar force vector."""
    return _run(positions, f, lam, policy, "any")


def synth_pieces(positions, pieces, policy: PlacementPolicy, builder: _Builder | None = None,
                 labels=None) -> tuple:
    """Superpose one rank-one gadget per ``(lam, f)`` piece on shared terminals.

    Returns the network and the placement records. Interior nodes of later
    pieces avoid every node placed before them.
    """
    X = _check_planar(positions)
    labels = labels or terminal_labels(len(X))
    b = builder or _Builder(policy, X, occupied=X)
    net = _terminals_net(labels, X)
    for k, piece in enumerate(pieces):
        b.prefix = f"p{k}n"
        b._count = 0
        F = np.asarray(piece.f, dtype=float).reshape(X.shape)
        gadget = _rank_one(b, labels, X, F)
        net = net.union(gadget.scaled(piece.lam))
    return net, b


def synth_static(resp: StaticResponse, policy: PlacementPolicy = PlacementPolicy(),
                 tol: float = DEFAULT_TOL) -> SynthesisReport:
    """Spring network whose static response equals ``resp``."""
    X = _check_planar(resp.terminal_positions)
    pieces = split_rank_one(resp, tol)
    net, b = synth_pieces(X, pieces, policy)
    return _report(net, resp.matrix, list(b.placer.records), 1.0, policy)
