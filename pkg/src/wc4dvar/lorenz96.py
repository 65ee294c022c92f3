"""Lorenz 96 dynamics, RK4 stepping and the exact tangent-linear/adjoint of
the discrete RK4 map.

The linearisation differentiates the RK4 scheme stage by stage, so the
adjoint is the exact transpose of the tangent-linear model and the dot
product test holds to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowupError, ConfigError


@dataclass(frozen=True)
class ModelConfig:
    n: int = 40
    forcing: float = 8.0
    dt: float = 2.5e-2
    steps: int = 15

    def __post_init__(self):
        if self.n < 4:
            raise ConfigError(f"state dimension must be >= 4, got {self.n}")
        if not self.dt >= 0:
            raise ConfigError(f"time step must be non-negative, got {self.dt}")
        if self.steps < 1:
            raise ConfigError(f"need at least one time step, got {self.steps}")


@dataclass(frozen=True)
class StageData:
    """Everything needed to linearise one RK4 step.

    ``inputs[k]`` is the state at which the k-th tendency was evaluated and
    ``tendencies[k]`` the tendency there.
    """

    inputs: np.ndarray
    tendencies: np.ndarray
    dt: float

    @property
    def n(self):
        return self.inputs.shape[1]

    @property
    def x(self):
        return self.inputs[0]

    def advance(self):
        """Recombine the cached stages into the RK4 update."""
        k = self.tendencies
        return self.x + (self.dt / 6.0) * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3])


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # (steps + 1, n)
    stages: tuple[StageData, ...]
    model_error: np.ndarray  # (steps, n); row i is added after step i

    @property
    def steps(self):
        return len(self.stages)

    def replay(self):
        """Rebuild the states from the stage cache alone."""
        out = np.empty_like(self.states)
        out[0] = self.stages[0].x if self.stages else self.states[0]
        for i, st in enumerate(self.stages):
            out[i + 1] = st.advance() + self.model_error[i]
        return out


def _as_state(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ConfigError(f"state must have shape ({n},), got {x.shape}")
    return x


def _l96(x, forcing):
    # dX_j/dt = (X_{j+1} - X_{j-2}) X_{j-1} - X_j + F, cyclic
    return (np.roll(x, -1) - np.roll(x, 2)) * np.roll(x, 1) - x + forcing


def tendency(x, cfg: ModelConfig):
    """Lorenz 96 right-hand side with cyclic boundary."""
    return _l96(_as_state(x, cfg.n), cfg.forcing)


def rk4_step(x, cfg: ModelConfig, step: int = 0):
    """One classical RK4 step. Returns ``(x_next, StageData)``."""
    x = _as_state(x, cfg.n)
    h = cfg.dt
    y = np.empty((4, cfg.n))
    k = np.empty((4, cfg.n))
    y[0] = x
    k[0] = _l96(y[0], cfg.forcing)
    y[1] = x + 0.5 * h * k[0]
    k[1] = _l96(y[1], cfg.forcing)
    y[2] = x + 0.5 * h * k[1]
    k[2] = _l96(y[2], cfg.forcing)
    y[3] = x + h * k[2]
    k[3] = _l96(y[3], cfg.forcing)
    stage = StageData(inputs=y, tendencies=k, dt=h)
    x_next = stage.advance()
    if not np.all(np.isfinite(x_next)):
        raise BlowupError(step)
    return x_next, stage


def integrate(x0, cfg: ModelConfig, model_error=None) -> Trajectory:
    """Run ``x_{i+1} = rk4_step(x_i) + eta_{i+1}`` for ``cfg.steps`` steps."""
    x0 = _as_state(x0, cfg.n)
    if model_error is None:
        eta = np.zeros((cfg.steps, cfg.n))
    else:
        eta = np.asarray(model_error, dtype=float)
        if eta.shape != (cfg.steps, cfg.n):
            raise ConfigError(
                f"model_error must have shape ({cfg.steps}, {cfg.n}), got {eta.shape}"
            )
    states = np.empty((cfg.steps + 1, cfg.n))
    states[0] = x0
    stages = []
    for i in range(cfg.steps):
        nxt, st = rk4_step(states[i], cfg, step=i)
        states[i + 1] = nxt + eta[i]
        if not np.all(np.isfinite(states[i + 1])):
            raise BlowupError(i)
        stages.append(st)
    return Trajectory(states=states, stages=tuple(stages), model_error=eta.copy())


def spin_up(x0, cfg: ModelConfig, steps: int):
    """Integrate without storing stages; used to reach the attractor."""
    x = _as_state(x0, cfg.n)
    for i in range(steps):
        x, _ = rk4_step(x, cfg, step=i)
    return x


def _tendency_jvp(x, v):
    xm1 = np.roll(x, 1)
    return (np.roll(v, -1) - np.roll(v, 2)) * xm1 + (np.roll(x, -1) - np.roll(x, 2)) * np.roll(v, 1) - v


def _tendency_vjp(x, w):
    a = np.roll(x, 1) * w
    b = (np.roll(x, -1) - np.roll(x, 2)) * w
    return np.roll(a, 1) - np.roll(a, -2) + np.roll(b, -1) - w


def _check_pair(stage: StageData, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (stage.n,):
        raise ConfigError(f"vector must have shape ({stage.n},), got {v.shape}")
    return v


def tlm_apply(stage: StageData, dx):
    """Jacobian of the discrete RK4 map at ``stage`` applied to ``dx``."""
    dx = _check_pair(stage, dx)
    h = stage.dt
    y = stage.inputs
    dk1 = _tendency_jvp(y[0], dx)
    dk2 = _tendency_jvp(y[1], dx + 0.5 * h * dk1)
    dk3 = _tendency_jvp(y[2], dx + 0.5 * h * dk2)
    dk4 = _tendency_jvp(y[3], dx + h * dk3)
    return dx + (h / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4)


def adjoint_apply(stage: StageData, lam):
    """Transpose of :func:`tlm_apply`, obtained by reversing the stages."""
    lam = _check_pair(stage, lam)
    h = stage.dt
    y = stage.inputs
    # adjoints of the stage tendencies dk1..dk4
    a4 = (h / 6.0) * lam
    g4 = _tendency_vjp(y[3], a4)
    a3 = (h / 3.0) * lam + h * g4
    g3 = _tendency_vjp(y[2], a3)
    a2 = (h / 3.0) * lam + 0.5 * h * g3
    g2 = _tendency_vjp(y[1], a2)
    a1 = (h / 6.0) * lam + 0.5 * h * g2
    g1 = _tendency_vjp(y[0], a1)
    return lam + g1 + g2 + g3 + g4


def tlm_matrix(stage: StageData):
    """Dense n x n Jacobian, one column per unit vector."""
    n = stage.n
    eye = np.eye(n)
    return np.column_stack([tlm_apply(stage, eye[:, j]) for j in range(n)])
