"""Four-dimensional operators L, H and the three coefficient operators.

Vectors over the whole window are stored time-major: block ``i`` of a
length ``s = (N+1) n`` vector is the state (or increment) at time ``t_i``.
Observation vectors list the observed components of ``t_0`` first, then
``t_1``, and so on, each time sorted by component index.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .covariance import BlockDiagCovariance
from .errors import ConfigError, NoObservationsError
from .lorenz96 import adjoint_apply, tlm_apply, tlm_matrix

MAX_DENSE_DIM = 4000


class Formulation(str, enum.Enum):
    A3 = "A3"
    A2 = "A2"
    A1 = "A1"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ObservationNetwork:
    """Observed component indices (0-based) at each of the N+1 times."""

    n: int
    indices: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        clean = []
        for t, ix in enumerate(self.indices):
            ix = tuple(sorted(int(j) for j in ix))
            if len(set(ix)) != len(ix):
                raise ConfigError(f"duplicate observed component at time {t}")
            if ix and (ix[0] < 0 or ix[-1] >= self.n):
                raise ConfigError(f"observed component out of range [0, {self.n}) at time {t}")
            clean.append(ix)
        object.__setattr__(self, "indices", tuple(clean))

    @classmethod
    def from_pairs(cls, n, steps, pairs):
        per_time = [[] for _ in range(steps + 1)]
        for t, j in pairs:
            if not 0 <= t <= steps:
                raise ConfigError(f"observation time {t} outside [0, {steps}]")
            per_time[t].append(j)
        return cls(n, tuple(tuple(ix) for ix in per_time))

    @classmethod
    def empty(cls, n, steps):
        return cls(n, tuple(() for _ in range(steps + 1)))

    @classmethod
    def full(cls, n, steps):
        return cls(n, tuple(tuple(range(n)) for _ in range(steps + 1)))

    @property
    def steps(self):
        return len(self.indices) - 1

    @property
    def counts(self):
        return [len(ix) for ix in self.indices]

    @property
    def p(self):
        return sum(self.counts)

    def pairs(self):
        return [(t, j) for t, ix in enumerate(self.indices) for j in ix]

    def flat_indices(self):
        """Positions of the observed entries inside a length-s vector."""
        return np.array([t * self.n + j for t, j in self.pairs()], dtype=int)

    def with_observation(self, t, j):
        if j in self.indices[t]:
            raise ConfigError(f"component {j} already observed at time {t}")
        return ObservationNetwork.from_pairs(self.n, self.steps, self.pairs() + [(t, j)])

    def issubset(self, other):
        return self.n == other.n and self.steps == other.steps and set(self.pairs()) <= set(other.pairs())

    def to_json(self):
        return json.dumps({"n": self.n, "indices": [list(ix) for ix in self.indices]})


class BlockOperators:
    """Matrix-free L, L^T, H, H^T plus the covariances D and R."""

    def __init__(self, stages, network: ObservationNetwork, D: BlockDiagCovariance,
                 R: BlockDiagCovariance | None):
        self.stages = tuple(stages)
        self.network = network
        self.n = network.n
        self.N = len(self.stages)
        if network.steps != self.N:
            raise ConfigError(f"network covers {network.steps} steps but trajectory has {self.N}")
        if any(st.n != self.n for st in self.stages):
            raise ConfigError("stage data dimension does not match the network")
        self.s = (self.N + 1) * self.n
        self.p = network.p
        if D.dim != self.s:
            raise ConfigError(f"D has dimension {D.dim}, expected {self.s}")
        if R is None:
            if self.p:
                raise ConfigError("R is required when there are observations")
        elif R.dim != self.p:
            raise ConfigError(f"R has dimension {R.dim}, expected {self.p}")
        self.D = D
        self.R = R
        self._obs = network.flat_indices()
        self._M = None

    def check_vector(self, v, length, what="vector"):
        v = np.asarray(v, dtype=float)
        if v.shape != (length,):
            raise ConfigError(f"{what} must have shape ({length},), got {v.shape}")
        return v

    def apply_L(self, v):
        v = self.check_vector(v, self.s).reshape(self.N + 1, self.n)
        out = v.copy()
        for i, st in enumerate(self.stages):
            out[i + 1] -= tlm_apply(st, v[i])
        return out.ravel()

    def apply_Lt(self, v):
        v = self.check_vector(v, self.s).reshape(self.N + 1, self.n)
        out = v.copy()
        for i, st in enumerate(self.stages):
            out[i] -= adjoint_apply(st, v[i + 1])
        return out.ravel()

    def apply_H(self, v):
        return self.check_vector(v, self.s)[self._obs]

    def apply_Ht(self, w):
        w = self.check_vector(w, self.p, "observation vector")
        out = np.zeros(self.s)
        out[self._obs] = w
        return out

    def apply_D(self, v):
        return self.D.matvec(v)

    def apply_Dinv(self, v):
        return self.D.solve(v)

    def apply_R(self, w):
        return self.R.matvec(w) if self.p else np.zeros(0)

    def apply_Rinv(self, w):
        return self.R.solve(w) if self.p else np.zeros(0)

    def apply_HtRinvH(self, v):
        return self.apply_Ht(self.apply_Rinv(self.apply_H(v)))

    # dense assembly

    def tlm_matrices(self):
        if self._M is None:
            self._M = [tlm_matrix(st) for st in self.stages]
        return self._M

    def dense_L(self):
        n = self.n
        L = np.eye(self.s)
        for i, M in enumerate(self.tlm_matrices()):
            L[(i + 1) * n:(i + 2) * n, i * n:(i + 1) * n] = -M
        return L

    def dense_H(self):
        H = np.zeros((self.p, self.s))
        H[np.arange(self.p), self._obs] = 1.0
        return H

    def dense_HtRinvH(self):
        out = np.zeros((self.s, self.s))
        if self.p:
            rinv = self.R.solve_matrix(np.eye(self.p))
            out[np.ix_(self._obs, self._obs)] = 0.5 * (rinv + rinv.T)
        return out


@dataclass
class SystemInstance:
    formulation: Formulation
    ops: BlockOperators
    rhs: np.ndarray
    b: np.ndarray
    d: np.ndarray

    @property
    def dim(self):
        return self.rhs.shape[0]

    def matvec(self, q):
        ops = self.ops
        s, p = ops.s, ops.p
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise ConfigError(f"vector must have shape ({self.dim},), got {q.shape}")
        if self.formulation is Formulation.A3:
            q1, q2, q3 = q[:s], q[s:s + p], q[s + p:]
            return np.concatenate([
                ops.apply_D(q1) + ops.apply_L(q3),
                ops.apply_R(q2) + ops.apply_H(q3),
                ops.apply_Lt(q1) + ops.apply_Ht(q2),
            ])
        if self.formulation is Formulation.A2:
            q1, q3 = q[:s], q[s:]
            return np.concatenate([
                ops.apply_D(q1) + ops.apply_L(q3),
                ops.apply_Lt(q1) - ops.apply_HtRinvH(q3),
            ])
        return ops.apply_Lt(ops.apply_Dinv(ops.apply_L(q))) + ops.apply_HtRinvH(q)

    __call__ = matvec


def system_dimension(ops: BlockOperators, formulation):
    f = Formulation(formulation)
    return {Formulation.A3: 2 * ops.s + ops.p, Formulation.A2: 2 * ops.s, Formulation.A1: ops.s}[f]


def make_system(ops: BlockOperators, formulation, b, d) -> SystemInstance:
    """Coefficient operator and right-hand side for one formulation.

    A3: rhs ``(b, d, 0)``; A2: rhs ``(b, -H^T R^{-1} d)``;
    A1: rhs ``L^T D^{-1} b + H^T R^{-1} d``.
    """
    f = Formulation(formulation)
    b = ops.check_vector(b, ops.s, "b")
    d = ops.check_vector(d, ops.p, "d")
    if f is not Formulation.A1 and ops.p == 0:
        raise NoObservationsError(f"{f} needs at least one observation")
    if f is Formulation.A3:
        rhs = np.concatenate([b, d, np.zeros(ops.s)])
    elif f is Formulation.A2:
        rhs = np.concatenate([b, -ops.apply_Ht(ops.apply_Rinv(d))])
    else:
        rhs = ops.apply_Lt(ops.apply_Dinv(b)) + ops.apply_Ht(ops.apply_Rinv(d))
    return SystemInstance(f, ops, rhs, b, d)


@dataclass
class Increment:
    dx: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    optimality_residual: float  # ||L^T lam + H^T mu||
    optimality_scale: float  # ||L^T lam|| + ||H^T mu||


def recover_increment(system: SystemInstance, solution) -> Increment:
    """Split a solution into (dx, lambda, mu) and evaluate the optimality
    residual ``L^T lam + H^T mu``."""
    ops = system.ops
    s, p = ops.s, ops.p
    x = np.asarray(solution, dtype=float)
    if x.shape != (system.dim,):
        raise ConfigError(f"solution must have shape ({system.dim},), got {x.shape}")
    f = system.formulation
    if f is Formulation.A3:
        lam, mu, dx = x[:s], x[s:s + p], x[s + p:]
    elif f is Formulation.A2:
        lam, dx = x[:s], x[s:]
        mu = ops.apply_Rinv(system.d - ops.apply_H(dx))
    else:
        dx = x
        lam = ops.apply_Dinv(system.b - ops.apply_L(dx))
        mu = ops.apply_Rinv(system.d - ops.apply_H(dx))
    lt = ops.apply_Lt(lam)
    ht = ops.apply_Ht(mu)
    return Increment(dx.copy(), lam.copy(), mu.copy(),
                     float(np.linalg.norm(lt + ht)),
                     float(np.linalg.norm(lt) + np.linalg.norm(ht)))


def assemble_dense(ops: BlockOperators, formulation, max_dim=MAX_DENSE_DIM):
    """Explicit symmetric matrix of one formulation (desk scale only)."""
    f = Formulation(formulation)
    dim = system_dimension(ops, f)
    if dim > max_dim:
        raise ConfigError(f"dense {f} would have dimension {dim} > cap {max_dim}")
    if f is not Formulation.A1 and ops.p == 0:
        raise NoObservationsError(f"{f} needs at least one observation")
    s, p = ops.s, ops.p
    L = ops.dense_L()
    if f is Formulation.A1:
        G = ops.D.solve_matrix(L)
        A = L.T @ G + ops.dense_HtRinvH()
        return 0.5 * (A + A.T)
    A = np.zeros((dim, dim))
    A[:s, :s] = ops.D.dense()
    if f is Formulation.A3:
        H = ops.dense_H()
        A[:s, s + p:] = L
        A[s + p:, :s] = L.T
        A[s:s + p, s:s + p] = ops.R.dense()
        A[s:s + p, s + p:] = H
        A[s + p:, s:s + p] = H.T
    else:
        A[:s, s:] = L
        A[s:, :s] = L.T
        A[s:, s:] = -ops.dense_HtRinvH()
    return A
