"""Global stiffness and mass matrices of a spring network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroRestLength
from .model import Network


@dataclass(frozen=True)
class AssembledSystem:
    K: np.ndarray
    M_full: np.ndarray
    node_order: dict
    dimension: int

    def dofs(self, labels) -> np.ndarray:
        """Global dof indices of ``labels``, node blocks in the given order."""
        d = self.dimension
        idx = [self.node_order[lab] * d + a for lab in labels for a in range(d)]
        return np.array(idx, dtype=int)


def spring_block(x_i, x_j, k: float) -> np.ndarray:
    """``k n n^T`` for the unit axis ``n`` from ``x_i`` to ``x_j``."""
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    delta = x_j - x_i
    length = np.linalg.norm(delta)
    if length == 0.0:
        raise ZeroRestLength(f"spring between coincident points {tuple(x_i)}")
    n = delta / length
    return k * np.outer(n, n)


def assemble(net: Network) -> AssembledSystem:
    d = net.dimension
    N = len(net.nodes)
    K = np.zeros((N * d, N * d))
    for s in net.springs:
        a, b = s.endpoints
        i, j = net.index(a), net.index(b)
        blk = spring_block(net.nodes[i].position, net.nodes[j].position, s.stiffness)
        si = slice(i * d, (i + 1) * d)
        sj = slice(j * d, (j + 1) * d)
        K[si, si] += blk
        K[sj, sj] += blk
        K[si, sj] -= blk
        K[sj, si] -= blk
    masses = np.repeat([n.mass for n in net.nodes], d) if N else np.zeros(0)
    order = {n.label: i for i, n in enumerate(net.nodes)}
    return AssembledSystem(K, np.diag(masses), order, d)


def spring_energy(x_i, x_j, k: float, u_i, u_j) -> float:
    """``k ((u_i - u_j) . n)^2``, twice the elastic energy stored in one spring."""
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    length = np.linalg.norm(x_j - x_i)
    if length == 0.0:
        raise ZeroRestLength("spring between coincident points")
    n = (x_j - x_i) / length
    elong = float(np.dot(np.asarray(u_i, dtype=float) - np.asarray(u_j, dtype=float), n))
    return k * elong * elong


def quadratic_form(sys: AssembledSystem, u) -> float:
    u = np.asarray(u, dtype=float).ravel()
    if u.shape[0] != sys.K.shape[0]:
        raise DimensionMismatch(f"displacement of length {u.shape[0]}, expected {sys.K.shape[0]}")
    return float(u @ sys.K @ u)


def network_energy(net: Network, u) -> float:
    """Sum of per-spring energies for a full displacement vector ``u``."""
    d = net.dimension
    u = np.asarray(u, dtype=float).reshape(-1, d)
    total = 0.0
    for s in net.springs:
        i, j = net.index(s.endpoints[0]), net.index(s.endpoints[1])
        total += spring_energy(net.nodes[i].position, net.nodes[j].position, s.stiffness, u[i], u[j])
    return total
