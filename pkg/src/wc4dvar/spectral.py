"""Dense symmetric eigensolver, singular-value extremes of L and (L^T H^T),
inertia counts, and the spectral summary the bound formulas consume."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numba
import numpy as np
import scipy.linalg

from .errors import ConfigError, ConvergenceError
from .operators import BlockOperators

ZERO_THRESHOLD = 1e-10
MAX_EIG_DIM = 4000


@numba.njit(cache=True)
def _jacobi_sweep(a, v, want_vectors):
    # one cyclic-by-row sweep; a is Fortran ordered so column updates are contiguous
    n = a.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = a[p, q]
            if apq == 0.0:
                continue
            app = a[p, p]
            aqq = a[q, q]
            theta = (aqq - app) / (2.0 * apq)
            if theta >= 0.0:
                t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
            else:
                t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            for k in range(n):
                akp = a[k, p]
                akq = a[k, q]
                a[k, p] = c * akp - s * akq
                a[k, q] = s * akp + c * akq
            for k in range(n):
                apk = a[p, k]
                aqk = a[q, k]
                a[p, k] = c * apk - s * aqk
                a[q, k] = s * apk + c * aqk
            a[p, p] = app - t * apq
            a[q, q] = aqq + t * apq
            a[p, q] = 0.0
            a[q, p] = 0.0
            if want_vectors:
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq


@numba.njit(cache=True)
def _off_norm(a):
    n = a.shape[0]
    acc = 0.0
    for j in range(n):
        for i in range(n):
            if i != j:
                acc += a[i, j] * a[i, j]
    return math.sqrt(acc)


def jacobi_eigh(A, tol=1e-12, max_sweeps=60, vectors=True):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm is at most
    ``tol * ||A||_F``. Returns ascending eigenvalues and (optionally) the
    matching orthonormal eigenvectors as columns.
    """
    a = np.array(A, dtype=float, order="F")
    n = a.shape[0]
    v = np.eye(n, order="F") if vectors else np.zeros((1, 1), order="F")
    target = tol * np.linalg.norm(a)
    sweeps = 0
    while _off_norm(a) > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
        _jacobi_sweep(a, v, vectors)
        sweeps += 1
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    if not vectors:
        return w, None
    return w, np.ascontiguousarray(v[:, order])


def _check_input(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_EIG_DIM:
        raise ConfigError(f"dimension {A.shape[0]} exceeds dense cap {MAX_EIG_DIM}")
    if A.size:
        scale = np.max(np.abs(A))
        if np.max(np.abs(A - A.T)) > 1e-12 * scale * max(1.0, math.sqrt(A.shape[0])):
            raise ConfigError("matrix is not symmetric")
    return A


def sym_eigh(A, method="jacobi", vectors=True):
    """Eigenvalues (ascending) and eigenvectors of a dense symmetric matrix.

    ``method="jacobi"`` uses the in-house cyclic Jacobi solver;
    ``method="lapack"`` defers to ``numpy.linalg.eigh``.
    """
    A = _check_input(A)
    if A.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    if method == "jacobi":
        return jacobi_eigh(A, vectors=vectors)
    if method == "lapack":
        if vectors:
            return np.linalg.eigh(A)
        return np.linalg.eigvalsh(A), None
    raise ConfigError(f"unknown eigensolver {method!r}")


@dataclass
class Spectrum:
    values: np.ndarray  # ascending
    name: str = ""

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=float))

    @property
    def norm(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @property
    def counts(self):
        return inertia(self)

    def negative(self):
        return self.values[self.values < -self.zero_tol]

    def positive(self):
        return self.values[self.values > self.zero_tol]

    @property
    def zero_tol(self):
        return ZERO_THRESHOLD * self.norm

    def count_in(self, lo, hi):
        return int(np.count_nonzero((self.values >= lo) & (self.values <= hi)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            for i, x in enumerate(self.values):
                w.writerow([i, repr(float(x))])


def sym_eig(A, method="jacobi", name="") -> Spectrum:
    w, _ = sym_eigh(A, method=method, vectors=False)
    return Spectrum(w, name)


def inertia(spectrum: Spectrum):
    """``(n_plus, n_minus, n_zero)`` with zero band ``1e-10 * ||A||``."""
    tol = spectrum.zero_tol
    v = spectrum.values
    return (int(np.count_nonzero(v > tol)), int(np.count_nonzero(v < -tol)),
            int(np.count_nonzero(np.abs(v) <= tol)))


def _gram_extremes(G, method):
    w = sym_eig(G, method).values
    scale = max(abs(w[-1]), 1.0)
    if w[0] < -1e-12 * scale:
        raise np.linalg.LinAlgError(f"Gram matrix has negative eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return math.sqrt(w[0]), math.sqrt(w[-1])


def gram_matrix(ops: BlockOperators, mode="LH"):
    L = ops.dense_L()
    G = L.T @ L
    if mode == "LH":
        # H^T H is the 0/1 diagonal of observed positions for selection operators
        G[np.diag_indices_from(G)] += np.bincount(ops.network.flat_indices(), minlength=ops.s)
    elif mode != "L":
        raise ConfigError(f"mode must be 'L' or 'LH', got {mode!r}")
    return 0.5 * (G + G.T)


def extreme_singular_values(ops: BlockOperators, mode="LH", method="jacobi"):
    """Smallest and largest singular values of L (``mode="L"``) or of
    ``(L^T H^T)`` (``mode="LH"``), from the Gram matrix eigenvalues."""
    return _gram_extremes(gram_matrix(ops, mode), method)


@dataclass
class ComponentSpectra:
    d: np.ndarray  # eigenvalues of D
    r: np.ndarray  # eigenvalues of R
    nu: np.ndarray  # eigenvalues of H^T R^{-1} H


def _union_of_blocks(blocks, method):
    cache = {}
    parts = []
    for blk in blocks:
        key = id(blk)
        if key not in cache:
            cache[key] = sym_eig(blk, method).values
        parts.append(cache[key])
    return np.sort(np.concatenate(parts)) if parts else np.zeros(0)


def component_spectra(ops: BlockOperators, method="jacobi") -> ComponentSpectra:
    d = _union_of_blocks(ops.D.blocks, method)
    r = _union_of_blocks(ops.R.blocks, method) if ops.p else np.zeros(0)
    # H^T R^{-1} H is block diagonal in time with n x n blocks H_i^T R_i^{-1} H_i
    nu_blocks = []
    factors = iter(ops.R.factors if ops.p else ())
    for ix in ops.network.indices:
        blk = np.zeros((ops.n, ops.n))
        if ix:
            rinv = scipy.linalg.cho_solve((next(factors), True), np.eye(len(ix)))
            blk[np.ix_(ix, ix)] = 0.5 * (rinv + rinv.T)
        nu_blocks.append(blk)
    nu = _union_of_blocks(nu_blocks, method)
    return ComponentSpectra(d, r, nu)


@dataclass
class SpectralSummary:
    psi_min: float
    psi_max: float
    nu_min: float
    nu_max: float
    rho_min: float
    rho_max: float
    theta_min: float
    theta_max: float
    sigma_min: float
    sigma_max: float

    @property
    def tau_min(self):
        return min(self.psi_min, self.rho_min)

    @property
    def tau_max(self):
        return max(self.psi_max, self.rho_max)

    def as_dict(self):
        out = asdict(self)
        out["tau_min"] = self.tau_min
        out["tau_max"] = self.tau_max
        return out


def summarize(ops: BlockOperators, method="jacobi", components: ComponentSpectra | None = None):
    """All extreme eigen/singular values used by the interval formulas."""
    comp = components or component_spectra(ops, method)
    if not ops.p:
        raise ConfigError("spectral summary needs at least one observation (rho undefined)")
    theta = extreme_singular_values(ops, "LH", method)
    sigma = extreme_singular_values(ops, "L", method)
    if theta[0] <= 0:
        raise np.linalg.LinAlgError("(L^T H^T) has a zero singular value")
    return SpectralSummary(
        psi_min=float(comp.d[0]), psi_max=float(comp.d[-1]),
        nu_min=float(max(comp.nu[0], 0.0)), nu_max=float(comp.nu[-1]),
        rho_min=float(comp.r[0]), rho_max=float(comp.r[-1]),
        theta_min=theta[0], theta_max=theta[1],
        sigma_min=sigma[0], sigma_max=sigma[1],
    )
