"""Unpreconditioned MINRES and CG with relative-residual histories."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import BreakdownError, ConfigError, NotSPDError


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-4
    max_iters: int = 400
    zero_start: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be non-negative")


@dataclass
class SolveLog:
    iterations: int = 0
    relative_residuals: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    # ||b - A x|| / ||b - A x0|| recomputed once at the end
    true_relative_residual: float = float("nan")

    @property
    def final(self):
        return self.relative_residuals[-1]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "relative_residual"])
            for j, r in enumerate(self.relative_residuals):
                w.writerow([j, repr(float(r))])


def _start(apply, rhs, cfg, x0):
    rhs = np.asarray(rhs, dtype=float)
    if rhs.ndim != 1:
        raise ConfigError("rhs must be a vector")
    if x0 is None or cfg.zero_start:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = np.array(x0, dtype=float)
        r = rhs - apply(x)
    return rhs, x, r


def _finish(log, apply, rhs, x, r0norm, t0):
    log.wall_time = time.perf_counter() - t0
    log.true_relative_residual = float(np.linalg.norm(rhs - apply(x)) / r0norm)
    return x, log


def check_symmetry(apply, dim, trials=3, seed=0, rtol=1e-12):
    """Random inner-product test ``<A q, r> == <q, A r>``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        q = rng.standard_normal(dim)
        r = rng.standard_normal(dim)
        aq, ar = apply(q), apply(r)
        scale = np.linalg.norm(aq) * np.linalg.norm(r) + np.linalg.norm(q) * np.linalg.norm(ar)
        worst = max(worst, abs(aq @ r - q @ ar) / scale)
    if worst > rtol:
        raise ConfigError(f"operator is not symmetric (relative defect {worst:.2e})")
    return worst


def minres(apply, rhs, cfg: SolverConfig = SolverConfig(), x0=None, debug=False):
    """MINRES for a symmetric (possibly indefinite) operator.

    Lanczos three-term recurrence with Givens rotations. The residual norm
    in the log is the recurrence value ``|eta_j|``, which is non-increasing;
    the true residual is recomputed once at the end.

    A zero right-hand side returns the zero vector with a single logged
    relative residual of 0.
    """
    t0 = time.perf_counter()
    rhs, x, r = _start(apply, rhs, cfg, x0)
    if debug:
        check_symmetry(apply, rhs.shape[0])
    log = SolveLog()
    beta1 = float(np.linalg.norm(r))
    if beta1 == 0.0:
        log.relative_residuals = [0.0]
        log.converged = True
        log.wall_time = time.perf_counter() - t0
        log.true_relative_residual = 0.0
        return x, log
    log.relative_residuals.append(1.0)

    v_old = np.zeros_like(r)
    v = r / beta1
    w_old = np.zeros_like(r)
    w = np.zeros_like(r)
    gamma = 0.0  # off-diagonal from the previous Lanczos step
    c_old, s_old = 1.0, 0.0
    c, s = 1.0, 0.0
    eta = beta1

    for j in range(1, cfg.max_iters + 1):
        av = apply(v)
        delta = float(v @ av)
        v_new = av - delta * v - gamma * v_old
        gamma_new = float(np.linalg.norm(v_new))

        a0 = c * delta - c_old * s * gamma
        a1 = math.hypot(a0, gamma_new)
        a2 = s * delta + c_old * c * gamma
        a3 = s_old * gamma
        if not (math.isfinite(a1) and a1 > 0.0):
            raise BreakdownError(j, f"MINRES breakdown at iteration {j} (rotation norm {a1})")
        c_new, s_new = a0 / a1, gamma_new / a1
        w_new = (v - a3 * w_old - a2 * w) / a1
        x = x + c_new * eta * w_new
        eta = -s_new * eta
        if not np.isfinite(eta):
            raise BreakdownError(j)

        log.iterations = j
        log.relative_residuals.append(abs(eta) / beta1)
        if abs(eta) / beta1 <= cfg.tol or gamma_new == 0.0:
            log.converged = abs(eta) / beta1 <= cfg.tol
            break

        v_old, v = v, v_new / gamma_new
        w_old, w = w, w_new
        gamma = gamma_new
        c_old, s_old, c, s = c, s, c_new, s_new

    return _finish(log, apply, rhs, x, beta1, t0)


def cg(apply, rhs, cfg: SolverConfig = SolverConfig(), x0=None):
    """Hestenes-Stiefel conjugate gradients.

    Raises NotSPDError on non-positive curvature ``p^T A p <= 0``.
    """
    t0 = time.perf_counter()
    rhs, x, r = _start(apply, rhs, cfg, x0)
    log = SolveLog()
    r0 = float(np.linalg.norm(r))
    if r0 == 0.0:
        log.relative_residuals = [0.0]
        log.converged = True
        log.true_relative_residual = 0.0
        log.wall_time = time.perf_counter() - t0
        return x, log
    log.relative_residuals.append(1.0)
    p = r.copy()
    rr = r0 * r0
    for j in range(1, cfg.max_iters + 1):
        ap = apply(p)
        curv = float(p @ ap)
        if not math.isfinite(curv):
            raise BreakdownError(j)
        if curv <= 0.0:
            raise NotSPDError(f"non-positive curvature {curv:.3e} at CG iteration {j}")
        alpha = rr / curv
        x = x + alpha * p
        r = r - alpha * ap
        rr_new = float(r @ r)
        log.iterations = j
        log.relative_residuals.append(math.sqrt(rr_new) / r0)
        if log.relative_residuals[-1] <= cfg.tol:
            log.converged = True
            break
        p = r + (rr_new / rr) * p
        rr = rr_new
    return _finish(log, apply, rhs, x, r0, t0)
