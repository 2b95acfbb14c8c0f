"""Seeded generators of test networks and realizable targets."""

from __future__ import annotations

import numpy as np

from .model import INTERIOR, TERMINAL, ModalResponse, Network, Node, Spring, StaticResponse, rigid_motion_basis


def generic_points(rng: np.random.Generator, n: int, d: int = 2, min_gap: float = 0.05) -> np.ndarray:
    """``n`` points in the unit box, pairwise at least ``min_gap`` apart."""
    pts = []
    while len(pts) < n:
        p = rng.uniform(0.0, 1.0, size=d)
        if all(np.linalg.norm(p - q) >= min_gap for q in pts):
            pts.append(p)
    return np.array(pts)


def random_network(
    rng: np.random.Generator,
    d: int = 2,
    n_terminals: int = 3,
    n_interior: int = 3,
    edge_prob: float = 0.5,
    mass_prob: float = 0.5,
    terminal_mass_prob: float = 0.0,
) -> Network:
    """Random positions, Erdos-Renyi springs with stiffness in [0.5, 2] and
    random masses in [0.5, 2]. The spring graph is made connected."""
    pts = generic_points(rng, n_terminals + n_interior, d)
    nodes = []
    for i, p in enumerate(pts):
        if i < n_terminals:
            m = rng.uniform(0.5, 2.0) if rng.uniform() < terminal_mass_prob else 0.0
            nodes.append(Node(f"t{i}", tuple(p), m, TERMINAL))
        else:
            m = rng.uniform(0.5, 2.0) if rng.uniform() < mass_prob else 0.0
            nodes.append(Node(f"i{i - n_terminals}", tuple(p), m, INTERIOR))
    labels = [n.label for n in nodes]
    pairs = set()
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            if rng.uniform() < edge_prob:
                pairs.add((a, b))
    # chain through a random order so the graph is connected
    order = rng.permutation(len(labels))
    for a, b in zip(order[:-1], order[1:]):
        pairs.add((min(a, b), max(a, b)))
    springs = [Spring((labels[a], labels[b]), rng.uniform(0.5, 2.0)) for a, b in sorted(pairs)]
    return Network(d, tuple(nodes), tuple(springs))


def random_balanced_forces(rng: np.random.Generator, points) -> np.ndarray:
    """Random force vector orthogonal to every rigid motion of ``points``."""
    pts = np.asarray(points, dtype=float)
    R = rigid_motion_basis(pts)
    f = rng.normal(size=pts.size)
    f -= R @ (R.T @ f)
    return f / np.linalg.norm(f)


def random_static_target(rng: np.random.Generator, n: int, rank: int | None = None) -> StaticResponse:
    """Sum of ``rank`` random balanced rank-one pieces on ``n`` generic planar terminals."""
    pts = generic_points(rng, n, 2, min_gap=0.15)
    top = max(1, 2 * n - 3)
    rank = int(rng.integers(1, top + 1)) if rank is None else rank
    W = np.zeros((2 * n, 2 * n))
    for _ in range(rank):
        f = random_balanced_forces(rng, pts)
        W += rng.uniform(0.5, 2.0) * np.outer(f, f)
    return StaticResponse(pts, W)


def random_modal_target(rng: np.random.Generator, n_terminals: int = 3, max_resonances: int = 3,
                        attempts: int = 100) -> tuple:
    """A planar network with masses and its modal form, with 1..max_resonances terms."""
    from .reduce import extract_modal

    for _ in range(attempts):
        n_mass = int(rng.integers(1, 3))
        n_free = int(rng.integers(0, 3))
        net = random_network(rng, 2, n_terminals, n_mass + n_free, edge_prob=0.5, mass_prob=0.0)
        masses = {f"i{k}": rng.uniform(0.5, 2.0) for k in range(n_mass)}
        net = net.with_masses(masses)
        modal = extract_modal(net)
        if 1 <= len(modal.terms) <= max_resonances:
            return net, modal
    raise RuntimeError("no network with the requested resonance count")


def with_dangling_node(rng: np.random.Generator, net: Network, mass: float = 0.0) -> Network:
    """Attach one extra interior node by a single spring, creating a floppy mode."""
    d = net.dimension
    anchor = net.nodes[int(rng.integers(len(net.nodes)))]
    for _ in range(100):
        p = np.asarray(anchor.position) + rng.normal(size=d) * 0.2
        if min(np.linalg.norm(net.positions - p, axis=1)) > 0.05:
            break
    label = "dangle"
    while label in net:
        label += "_"
    node = Node(label, tuple(p), mass, INTERIOR)
    return net.with_nodes([node]).with_springs([Spring((anchor.label, label), rng.uniform(0.5, 2.0))])


def modal_from_pieces(rng: np.random.Generator, n: int = 3, n_res: int = 2) -> ModalResponse:
    """Valid modal response assembled from random pieces on generic planar terminals."""
    static = random_static_target(rng, n)
    terms = []
    for k in range(n_res):
        f = rng.normal(size=2 * n)
        terms.append((float(k + 1 + rng.uniform(0, 0.5)), np.outer(f, f)))
    A = static.matrix + sum(C / w for w, C in terms)
    masses = rng.uniform(0.0, 1.0, size=n)
    return ModalResponse.from_masses(static.terminal_positions, A, masses, terms)
