"""Error covariances: SOAR background/model-error blocks, diagonal
observation errors, block-diagonal containers and Gaussian sampling."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, NoObservationsError, NotSPDError

SYMMETRY_TOL = 1e-14


@dataclass(frozen=True)
class CovarianceSpec:
    sigma_b: float = 5e-2
    length_scale: float = 1.5e-2
    sigma_o: float = 1e-1
    dx: float = 1.0 / 40
    # "arc": grid distance along the periodic domain; "chordal": straight-line
    # distance between points on the circle of circumference one
    distance: str = "arc"

    def __post_init__(self):
        for name in ("sigma_b", "length_scale", "sigma_o", "dx"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.distance not in ("arc", "chordal"):
            raise ConfigError(f"unknown distance metric {self.distance!r}")


def periodic_distance(n, dx, distance="arc"):
    idx = np.arange(n)
    k = np.abs(idx[:, None] - idx[None, :])
    k = np.minimum(k, n - k)
    if distance == "arc":
        return k * dx
    length = n * dx
    return length / np.pi * np.sin(np.pi * k / n)


def soar_correlation(n, length_scale, dx, distance="arc"):
    d = periodic_distance(n, dx, distance) / length_scale
    return (1.0 + d) * np.exp(-d)


def _cholesky(a, what="matrix"):
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotSPDError(f"{what} is not positive definite",
                          float(np.linalg.eigvalsh(a)[0])) from None


def check_symmetric(a, tol=SYMMETRY_TOL, what="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"{what} must be square, got shape {a.shape}")
    scale = max(np.linalg.norm(a, 2), np.finfo(float).tiny)
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > tol * scale:
        raise ConfigError(f"{what} is not symmetric (max |A - A^T| = {asym:.3e})")
    return a


def soar_matrix(n, spec: CovarianceSpec):
    """``sigma_b**2`` times the SOAR correlation matrix on a periodic grid.

    Raises NotSPDError (with the smallest eigenvalue) if the result is not
    positive definite.
    """
    if n < 2:
        raise ConfigError("SOAR matrix needs n >= 2")
    b = spec.sigma_b**2 * soar_correlation(n, spec.length_scale, spec.dx, spec.distance)
    _cholesky(b, "SOAR covariance")
    return b


class BlockDiagCovariance:
    """Symmetric positive definite block-diagonal matrix.

    Identical block objects share one Cholesky factor, so ``D`` with N
    copies of ``Q`` factorises ``Q`` once.
    """

    def __init__(self, blocks):
        factors = {}
        self.blocks = []
        self.factors = []
        for i, blk in enumerate(blocks):
            blk = np.asarray(blk, dtype=float)
            key = id(blk)
            if key not in factors:
                check_symmetric(blk, what=f"block {i}")
                factors[key] = _cholesky(blk, f"block {i}")
            self.blocks.append(blk)
            self.factors.append(factors[key])
        self.sizes = [b.shape[0] for b in self.blocks]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)

    @property
    def dim(self):
        return int(self.offsets[-1])

    def _split(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ConfigError(f"vector must have shape ({self.dim},), got {v.shape}")
        return [v[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def matvec(self, v):
        return np.concatenate([blk @ part for blk, part in zip(self.blocks, self._split(v))] or [np.zeros(0)])

    def solve(self, v):
        """Apply the inverse through the cached Cholesky factors."""
        out = [scipy.linalg.cho_solve((g, True), part)
               for g, part in zip(self.factors, self._split(v))]
        return np.concatenate(out or [np.zeros(0)])

    def solve_matrix(self, m):
        m = np.asarray(m, dtype=float)
        out = np.empty_like(m)
        for g, a, b in zip(self.factors, self.offsets[:-1], self.offsets[1:]):
            out[a:b] = scipy.linalg.cho_solve((g, True), m[a:b])
        return out

    def dense(self):
        return scipy.linalg.block_diag(*self.blocks) if self.blocks else np.zeros((0, 0))

    def eigenvalues(self):
        """Sorted spectrum, taken as the union of the block spectra."""
        cache = {}
        parts = []
        for blk in self.blocks:
            key = id(blk)
            if key not in cache:
                cache[key] = np.linalg.eigvalsh(blk)
            parts.append(cache[key])
        return np.sort(np.concatenate(parts)) if parts else np.zeros(0)

    def extremes(self):
        ev = self.eigenvalues()
        return float(ev[0]), float(ev[-1])

    def lower_factor_apply(self, z):
        return np.concatenate([g @ part for g, part in zip(self.factors, self._split(z))] or [np.zeros(0)])


def build_D(B, Q, N):
    """``blockdiag(B, Q, ..., Q)`` with N copies of Q."""
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if B.shape != Q.shape:
        raise ConfigError(f"B and Q must have equal shape, got {B.shape} and {Q.shape}")
    if N < 0:
        raise ConfigError("N must be non-negative")
    return BlockDiagCovariance([B] + [Q] * N)


def build_R(network, sigma_o=None, blocks=None):
    """Observation error covariance, one block per observed time.

    With ``sigma_o`` every block is ``sigma_o**2 * I``; alternatively pass
    ``blocks`` (one SPD matrix per time with observations).
    """
    sizes = [len(ix) for ix in network.indices if len(ix) > 0]
    if not sizes:
        raise NoObservationsError("network has no observations (p = 0)")
    if blocks is None:
        if sigma_o is None or not sigma_o > 0:
            raise ConfigError("sigma_o must be strictly positive")
        blocks = [sigma_o**2 * np.eye(m) for m in sizes]
    else:
        blocks = [np.asarray(b, dtype=float) for b in blocks]
        if [b.shape[0] for b in blocks] != sizes:
            raise ConfigError("R blocks do not match the network's per-time observation counts")
    return BlockDiagCovariance(blocks)


def sample_gaussian(cov: BlockDiagCovariance, seed):
    """Draw ``G z`` with ``G`` the lower Cholesky factor and ``z ~ N(0, I)``.

    ``seed`` is anything accepted by ``numpy.random.default_rng`` (an int,
    a SeedSequence, or a Generator, which is then advanced).
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(cov.dim)
    return cov.lower_factor_apply(z)


def save_matrix_csv(path, a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in a:
            w.writerow([repr(float(v)) for v in row])
