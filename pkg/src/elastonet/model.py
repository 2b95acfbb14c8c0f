"""Core value types: nodes, springs, networks, force systems and responses.

Matrices over terminal displacements use node blocks in network order with
the coordinate index varying fastest, so entry ``(d*i + a, d*j + b)`` couples
coordinate ``a`` of terminal ``i`` with coordinate ``b`` of terminal ``j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidNetwork,
    ResonanceProximity,
    ZeroRestLength,
)

TERMINAL = "terminal"
INTERIOR = "interior"

#: default relative tolerance for balance / PSD checks
DEFAULT_TOL = 1e-9
#: relative guard around resonances, scaled by max(1, max omega_i^2)
RESONANCE_GUARD = 1e-8


def wedge(u, v):
    """Exterior product: the scalar ``det[u, v]`` in 2D, the cross product in 3D."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] == 2:
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    if u.shape[-1] == 3:
        return np.cross(u, v)
    raise DimensionMismatch(f"wedge needs 2- or 3-vectors, got {u.shape[-1]}")


def rigid_motion_basis(points) -> np.ndarray:
    """Orthonormal basis (columns) of the infinitesimal rigid motions of ``points``.

    Translations plus infinitesimal rotations. A force vector is balanced
    exactly when it is orthogonal to all of them.
    """
    pts = np.asarray(points, dtype=float)
    n, d = pts.shape
    fields = []
    for a in range(d):
        t = np.zeros((n, d))
        t[:, a] = 1.0
        fields.append(t.ravel())
    if d == 2:
        rot = np.column_stack([-pts[:, 1], pts[:, 0]])
        fields.append(rot.ravel())
    else:
        for axis in np.eye(3):
            fields.append(np.cross(axis, pts).ravel())
    basis = np.column_stack(fields)
    u, s, _ = np.linalg.svd(basis, full_matrices=False)
    if s.size == 0:
        return basis
    keep = s > 1e-12 * max(s[0], 1.0)
    return u[:, keep]


@dataclass(frozen=True)
class Node:
    label: str
    position: tuple
    mass: float = 0.0
    kind: str = INTERIOR

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "mass", float(self.mass))
        if not all(math.isfinite(c) for c in pos):
            raise InvalidNetwork(f"node {self.label!r}: non-finite position {pos}")
        if not math.isfinite(self.mass) or self.mass < 0:
            raise InvalidNetwork(f"node {self.label!r}: mass must be finite and >= 0")
        if self.kind not in (TERMINAL, INTERIOR):
            raise InvalidNetwork(f"node {self.label!r}: unknown kind {self.kind!r}")

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL

    @property
    def x(self) -> np.ndarray:
        return np.array(self.position)


@dataclass(frozen=True)
class Spring:
    endpoints: tuple
    stiffness: float

    def __post_init__(self):
        a, b = self.endpoints
        object.__setattr__(self, "endpoints", (str(a), str(b)))
        object.__setattr__(self, "stiffness", float(self.stiffness))
        if a == b:
            raise ZeroRestLength(f"spring joins node {a!r} to itself")
        if not math.isfinite(self.stiffness) or self.stiffness < 0:
            raise InvalidNetwork(f"spring {a!r}-{b!r}: stiffness must be finite and >= 0")

    @property
    def key(self) -> frozenset:
        return frozenset(self.endpoints)


def _merge_springs(springs: Iterable[Spring]) -> tuple:
    merged: dict = {}
    for s in springs:
        if s.key in merged:
            prev = merged[s.key]
            merged[s.key] = Spring(prev.endpoints, prev.stiffness + s.stiffness)
        else:
            merged[s.key] = s
    return tuple(merged.values())


@dataclass(frozen=True)
class Network:
    """Nodes plus springs in ``dimension`` space.

    Duplicate springs over the same unordered node pair are merged by
    summing their stiffnesses.
    """

    dimension: int
    nodes: tuple
    springs: tuple = ()
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise DimensionMismatch(f"dimension must be 2 or 3, got {self.dimension}")
        nodes = tuple(self.nodes)
        index = {}
        for i, node in enumerate(nodes):
            if len(node.position) != self.dimension:
                raise DimensionMismatch(
                    f"node {node.label!r} has {len(node.position)} coordinates, expected {self.dimension}"
                )
            if node.label in index:
                raise InvalidNetwork(f"duplicate node label {node.label!r}")
            index[node.label] = i
        if not any(n.is_terminal for n in nodes):
            raise InvalidNetwork("network needs at least one terminal node")
        seen = {}
        for node in nodes:
            if node.position in seen:
                raise InvalidNetwork(
                    f"nodes {seen[node.position]!r} and {node.label!r} coincide at {node.position}"
                )
            seen[node.position] = node.label
        springs = _merge_springs(self.springs)
        for s in springs:
            for end in s.endpoints:
                if end not in index:
                    raise InvalidNetwork(f"spring refers to unknown node {end!r}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "springs", springs)
        object.__setattr__(self, "_index", index)

    # -- lookup -----------------------------------------------------------
    def node(self, label: str) -> Node:
        return self.nodes[self._index[label]]

    def index(self, label: str) -> int:
        return self._index[label]

    def __contains__(self, label) -> bool:
        return label in self._index

    @property
    def labels(self) -> list:
        return [n.label for n in self.nodes]

    @property
    def terminals(self) -> list:
        return [n for n in self.nodes if n.is_terminal]

    @property
    def interior(self) -> list:
        return [n for n in self.nodes if not n.is_terminal]

    @property
    def terminal_positions(self) -> np.ndarray:
        return np.array([n.position for n in self.terminals], dtype=float).reshape(-1, self.dimension)

    @property
    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes], dtype=float).reshape(-1, self.dimension)

    @property
    def terminal_masses(self) -> np.ndarray:
        return np.array([n.mass for n in self.terminals])

    # -- derived networks -------------------------------------------------
    def with_springs(self, springs: Iterable[Spring]) -> "Network":
        return Network(self.dimension, self.nodes, tuple(self.springs) + tuple(springs))

    def with_nodes(self, nodes: Iterable[Node]) -> "Network":
        return Network(self.dimension, tuple(self.nodes) + tuple(nodes), self.springs)

    def demote(self, labels: Iterable[str]) -> "Network":
        """Turn the given terminals into interior nodes."""
        labels = set(labels)
        nodes = tuple(replace(n, kind=INTERIOR) if n.label in labels else n for n in self.nodes)
        return Network(self.dimension, nodes, self.springs)

    def with_masses(self, masses: Mapping[str, float]) -> "Network":
        nodes = tuple(replace(n, mass=masses[n.label]) if n.label in masses else n for n in self.nodes)
        return Network(self.dimension, nodes, self.springs)

    def scaled(self, factor: float) -> "Network":
        """Multiply every spring constant by ``factor``."""
        springs = tuple(Spring(s.endpoints, s.stiffness * factor) for s in self.springs)
        return Network(self.dimension, self.nodes, springs)

    def union(self, *others: "Network") -> "Network":
        """Superpose networks; nodes with the same label are identified.

        Shared nodes must sit at the same position and have the same kind.
        Their masses must agree unless one side is massless.
        """
        nodes = list(self.nodes)
        index = dict(self._index)
        springs = list(self.springs)
        for other in others:
            if other.dimension != self.dimension:
                raise DimensionMismatch("cannot superpose networks of different dimension")
            for n in other.nodes:
                if n.label in index:
                    mine = nodes[index[n.label]]
                    if mine.position != n.position or mine.kind != n.kind:
                        raise InvalidNetwork(f"shared node {n.label!r} differs between networks")
                    if mine.mass and n.mass and mine.mass != n.mass:
                        raise InvalidNetwork(f"shared node {n.label!r} has conflicting masses")
                    if n.mass and not mine.mass:
                        nodes[index[n.label]] = n
                else:
                    index[n.label] = len(nodes)
                    nodes.append(n)
            springs.extend(other.springs)
        return Network(self.dimension, tuple(nodes), tuple(springs))

    def spring_axis(self, spring: Spring) -> tuple:
        a, b = spring.endpoints
        xa = self.node(a).x
        xb = self.node(b).x
        length = float(np.linalg.norm(xb - xa))
        if length == 0.0:
            raise ZeroRestLength(f"spring {a!r}-{b!r} has zero rest length")
        return (xb - xa) / length, length


@dataclass(frozen=True)
class BalanceCheck:
    ok: bool
    force_residual: np.ndarray
    torque_residual: np.ndarray
    scale: float

    @property
    def residual(self) -> float:
        return float(max(np.linalg.norm(self.force_residual), np.linalg.norm(self.torque_residual)))


@dataclass(frozen=True)
class BalancedForceSystem:
    """Forces attached to points; balance is checked with :func:`check_balanced`."""

    points: np.ndarray
    forces: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        frc = np.asarray(self.forces, dtype=float).reshape(pts.shape[0], -1) if pts.size else pts
        if pts.shape != frc.shape:
            raise DimensionMismatch(f"points {pts.shape} and forces {frc.shape} differ")
        if pts.shape[1] not in (2, 3):
            raise DimensionMismatch(f"dimension must be 2 or 3, got {pts.shape[1]}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "forces", frc)

    @classmethod
    def from_vector(cls, points, f) -> "BalancedForceSystem":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        f = np.asarray(f, dtype=float)
        if f.size != pts.size:
            raise DimensionMismatch(f"force vector of length {f.size} for {pts.shape[0]} points")
        return cls(pts, f.reshape(pts.shape))


def check_balanced(system: BalancedForceSystem, tol: float = DEFAULT_TOL) -> BalanceCheck:
    """Test force and torque balance relative to ``max(1, sum |f_i| (1 + |x_i|))``."""
    pts, frc = system.points, system.forces
    force_res = frc.sum(axis=0)
    torque_res = np.asarray(wedge(pts, frc).sum(axis=0))
    scale = max(1.0, float(np.sum(np.linalg.norm(frc, axis=1) * (1.0 + np.linalg.norm(pts, axis=1)))))
    ok = np.linalg.norm(force_res) <= tol * scale and np.linalg.norm(torque_res) <= tol * scale
    return BalanceCheck(bool(ok), force_res, torque_res, scale)


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class StaticResponse:
    """Symmetric PSD matrix acting on terminal displacements.

    Only shapes are enforced here; the realizability invariants are checked
    by :func:`elastonet.realizability.validate_static` so that invalid
    candidates can still be represented and diagnosed.
    """

    terminal_positions: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.terminal_positions, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise DimensionMismatch(f"terminal positions must be (n, 2|3), got {pts.shape}")
        mat = np.asarray(self.matrix, dtype=float)
        nd = pts.size
        if mat.shape != (nd, nd):
            raise DimensionMismatch(f"matrix shape {mat.shape} does not match {nd} terminal dofs")
        object.__setattr__(self, "terminal_positions", pts)
        object.__setattr__(self, "matrix", mat)

    @property
    def dimension(self) -> int:
        return self.terminal_positions.shape[1]

    @property
    def n_terminals(self) -> int:
        return self.terminal_positions.shape[0]


@dataclass(frozen=True)
class ModalResponse:
    """``W(w) = A - w^2 M + sum_i C_i / (w^2 - w_i^2)`` in explicit form.

    ``terms`` is a sequence of ``(omega_sq, C)`` pairs.
    """

    terminal_positions: np.ndarray
    A: np.ndarray
    M: np.ndarray
    terms: tuple = ()

    def __post_init__(self):
        pts = np.asarray(self.terminal_positions, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise DimensionMismatch(f"terminal positions must be (n, 2|3), got {pts.shape}")
        nd = pts.size
        A = np.asarray(self.A, dtype=float)
        M = np.asarray(self.M, dtype=float)
        if A.shape != (nd, nd) or M.shape != (nd, nd):
            raise DimensionMismatch(f"A {A.shape} / M {M.shape} do not match {nd} terminal dofs")
        terms = []
        for omega_sq, C in self.terms:
            C = np.asarray(C, dtype=float)
            if C.shape != (nd, nd):
                raise DimensionMismatch(f"residue shape {C.shape} does not match {nd} terminal dofs")
            terms.append((float(omega_sq), C))
        object.__setattr__(self, "terminal_positions", pts)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def from_masses(cls, terminal_positions, A, masses, terms=()) -> "ModalResponse":
        pts = np.asarray(terminal_positions, dtype=float)
        M = np.diag(np.repeat(np.asarray(masses, dtype=float), pts.shape[1]))
        return cls(pts, A, M, tuple(terms))

    @property
    def dimension(self) -> int:
        return self.terminal_positions.shape[1]

    @property
    def resonances(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    @property
    def masses(self) -> np.ndarray:
        return np.diag(self.M)[:: self.dimension].copy()

    def guard(self) -> float:
        top = max((w for w, _ in self.terms), default=0.0)
        return RESONANCE_GUARD * max(1.0, top)

    def static_matrix(self) -> np.ndarray:
        """``W(0) = A - sum_i C_i / w_i^2``."""
        W0 = self.A.copy()
        for omega_sq, C in self.terms:
            W0 = W0 - C / omega_sq
        return W0

    def static_part(self) -> StaticResponse:
        return StaticResponse(self.terminal_positions, self.static_matrix())

    def __call__(self, omega: float) -> np.ndarray:
        return evaluate_modal(self, omega)


def evaluate_modal(resp: ModalResponse, omega: float, symmetric: bool = True) -> np.ndarray:
    """Evaluate the modal form at angular frequency ``omega``.

    Raises :class:`ResonanceProximity` if ``omega**2`` is within the guard
    distance of a resonance.
    """
    w2 = float(omega) ** 2
    guard = resp.guard()
    out = resp.A - w2 * resp.M
    for omega_sq, C in resp.terms:
        gap = w2 - omega_sq
        if abs(gap) < guard:
            raise ResonanceProximity(w2, omega_sq, guard)
        out = out + C / gap
    return symmetrize(out) if symmetric else out


def as_points(points: Sequence, dimension: int | None = None) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if dimension is not None and pts.shape[1] != dimension:
        raise DimensionMismatch(f"expected {dimension}-vectors, got {pts.shape[1]}")
    return pts
