"""Eigenvalue intervals for the three formulations, the Axelsson-Neytcheva
alternatives, per-eigenvalue bands, and monotonicity verdicts along chains
of nested observation networks.

Every evaluator takes a :class:`SpectralSummary` rather than operators, so
synthetic summaries can be fed straight in.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .operators import Formulation
from .spectral import SpectralSummary, Spectrum, sym_eigh

CONTAINMENT_SLACK = 1e-10
MONOTONE_SLACK = 1e-12
ORDER_RTOL = 1e-12


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo <= self.hi:
            return
        # endpoints that coincide analytically may round in either order
        if self.lo - self.hi <= ORDER_RTOL * max(abs(self.lo), abs(self.hi)):
            mid = 0.5 * (self.lo + self.hi)
            object.__setattr__(self, "lo", mid)
            object.__setattr__(self, "hi", mid)
            return
        raise ConfigError(f"ill-ordered interval [{self.lo}, {self.hi}]")

    def contains(self, x, slack=0.0):
        return self.lo - slack <= x <= self.hi + slack

    def __contains__(self, x):
        return self.contains(x)

    def issubset(self, other, slack=0.0):
        return other.lo - slack <= self.lo and self.hi <= other.hi + slack

    def as_list(self):
        return [self.lo, self.hi]


@dataclass
class Containment:
    contained: bool
    violations: int
    worst_excess: float  # largest distance outside the interval, 0 if none
    slack: float


@dataclass
class BoundsReport:
    formulation: Formulation
    positive: Interval
    negative: Interval | None = None
    variant: str = "standard"  # or "axelsson-neytcheva"
    beta1: float | None = None
    beta2: float | None = None
    beta3: float | None = None
    beta_choice: str | None = None  # which beta set the A2 negative upper bound
    xi: float | None = None
    containment: Containment | None = None

    def to_dict(self):
        out = {
            "formulation": str(self.formulation),
            "variant": self.variant,
            "negative": self.negative.as_list() if self.negative else None,
            "positive": self.positive.as_list(),
        }
        for key in ("beta1", "beta2", "beta3", "beta_choice", "xi"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.containment is not None:
            out["containment"] = asdict(self.containment)
            out["verdict"] = "CONTAINED" if self.containment.contained else "VIOLATED"
        return out

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _neg_root(a, b2):
    # 0.5 * (a - sqrt(a^2 + 4 b2)), the negative root of z^2 - a z - b2
    return 0.5 * (a - math.sqrt(a * a + 4.0 * b2))


def _pos_root(a, b2):
    return 0.5 * (a + math.sqrt(a * a + 4.0 * b2))


def bounds_a3(s: SpectralSummary) -> BoundsReport:
    """Rusten-Winther intervals for the 3x3 block matrix."""
    tmin, tmax = s.tau_min, s.tau_max
    neg = Interval(_neg_root(tmin, s.theta_max**2), _neg_root(tmax, s.theta_min**2))
    pos = Interval(tmin, _pos_root(tmax, s.theta_max**2))
    return BoundsReport(Formulation.A3, pos, neg)


def a2_betas(s: SpectralSummary):
    beta1 = 0.5 * (s.psi_max - s.nu_min
                   - math.sqrt((s.psi_max + s.nu_min) ** 2 + 4.0 * s.sigma_min**2))
    beta2 = -s.theta_min**2 / s.rho_max
    beta3 = _neg_root(s.psi_max, s.theta_min**2)
    return beta1, beta2, beta3


def bounds_a2(s: SpectralSummary) -> BoundsReport:
    """Intervals for the 2x2 block matrix.

    The negative upper bound is ``min(beta1, max(beta2, beta3))``; the report
    records which of the three produced it.
    """
    beta1, beta2, beta3 = a2_betas(s)
    inner = max(beta2, beta3)
    upper = min(beta1, inner)
    if upper == beta1:
        choice = "beta1"
    else:
        choice = "beta3" if beta3 >= beta2 else "beta2"
    lower = 0.5 * (s.psi_min - s.nu_max
                   - math.sqrt((s.psi_min + s.nu_max) ** 2 + 4.0 * s.sigma_max**2))
    pos_lo = 0.5 * (s.psi_min - s.nu_max
                    + math.sqrt((s.psi_min + s.nu_max) ** 2 + 4.0 * s.sigma_min**2))
    pos_hi = 0.5 * (s.psi_max - s.nu_min
                    + math.sqrt((s.psi_max + s.nu_min) ** 2 + 4.0 * s.sigma_max**2))
    return BoundsReport(Formulation.A2, Interval(pos_lo, pos_hi), Interval(lower, upper),
                        beta1=beta1, beta2=beta2, beta3=beta3, beta_choice=choice)


def beta3_selected(s: SpectralSummary):
    """Closed-form test for ``max(beta2, beta3) == beta3``."""
    return s.rho_max <= _pos_root(s.psi_max, s.theta_min**2)


def bounds_a1(s: SpectralSummary) -> BoundsReport:
    return BoundsReport(Formulation.A1,
                        Interval(s.theta_min**2 / s.tau_max, s.theta_max**2 / s.tau_min))


@dataclass
class ANInputs:
    """Extra spectral data the Axelsson-Neytcheva bounds need."""

    a1_min: float
    a1_max: float
    ldl_max: float  # largest eigenvalue of L^T D^{-1} L
    xi: float


def an_inputs(a1_dense, ldl_dense, method="lapack") -> ANInputs:
    """Eigen-extremes of A1 and ``L^T D^{-1} L``, and
    ``xi = max |lambda(A1^{-1/2} L^T D^{-1} L A1^{-1/2})|`` through the
    symmetric square root of A1."""
    w, V = sym_eigh(a1_dense, method=method, vectors=True)
    if w[0] <= 0:
        raise np.linalg.LinAlgError(f"A1 is not positive definite (min eigenvalue {w[0]:.3e})")
    inv_sqrt = (V / np.sqrt(w)) @ V.T
    K = inv_sqrt @ ldl_dense @ inv_sqrt
    k, _ = sym_eigh(0.5 * (K + K.T), method=method, vectors=False)
    ldl, _ = sym_eigh(ldl_dense, method=method, vectors=False)
    return ANInputs(float(w[0]), float(w[-1]), float(ldl[-1]), float(np.max(np.abs(k))))


def bounds_an(s: SpectralSummary, extra: ANInputs):
    """Axelsson-Neytcheva intervals for A3 and A2 (returned as a dict)."""
    tmin, tmax = s.tau_min, s.tau_max
    a3 = BoundsReport(
        Formulation.A3,
        Interval(tmin, _pos_root(tmax, tmax * extra.a1_max)),
        Interval(_neg_root(tmax, tmax * extra.a1_max), _neg_root(tmin, tmin * extra.a1_min)),
        variant="axelsson-neytcheva",
    )
    a2 = BoundsReport(
        Formulation.A2,
        Interval(s.psi_min, _pos_root(s.psi_max, s.psi_max * extra.ldl_max)),
        Interval(-extra.a1_max, -extra.a1_min / (1.0 + extra.xi * extra.a1_min / s.psi_min)),
        variant="axelsson-neytcheva",
        xi=extra.xi,
    )
    return {Formulation.A3: a3, Formulation.A2: a2}


def check_containment(report: BoundsReport, spectrum: Spectrum, slack=CONTAINMENT_SLACK):
    """Attach a containment verdict: every eigenvalue must lie in the
    negative or positive interval, up to ``slack * ||A||``."""
    tol = slack * spectrum.norm
    worst = 0.0
    bad = 0
    for x in spectrum.values:
        iv = report.positive if x > 0 or report.negative is None else report.negative
        excess = max(iv.lo - x, x - iv.hi, 0.0)
        if excess > tol:
            bad += 1
        worst = max(worst, excess)
    return replace(report, containment=Containment(bad == 0, bad, worst, tol))


# per-eigenvalue bands


@dataclass
class Bands:
    """Index-matched bands; row k bounds the k-th largest eigenvalue."""

    formulation: Formulation
    lo: np.ndarray
    hi: np.ndarray

    def check(self, spectrum: Spectrum, slack=CONTAINMENT_SLACK):
        vals = spectrum.values[::-1]
        if vals.shape != self.lo.shape:
            raise ConfigError(f"spectrum has {vals.size} values, bands cover {self.lo.size}")
        tol = slack * spectrum.norm
        excess = np.maximum(np.maximum(self.lo - vals, vals - self.hi), 0.0)
        return Containment(bool(np.all(excess <= tol)), int(np.count_nonzero(excess > tol)),
                           float(excess.max(initial=0.0)), tol)


def individual_bounds(s: SpectralSummary, d_eigs, r_eigs, nu_eigs):
    """Weyl-type bands for every eigenvalue of A3 and A2.

    A3: the k-th largest positive eigenvalue lies within ``theta_max`` of the
    k-th largest eigenvalue of blockdiag(D, R); the negative ones lie in
    ``[-theta_max, 0)``. A2: within ``sigma_max`` of the k-th largest value
    of ``{psi} U {-nu}``, clipped to the known sign. For a partially
    observed system the ``s - p`` zero values of nu give bands
    ``[-sigma_max, 0]`` and the ``p`` non-zero ones give bands around
    ``-nu_k``.
    """
    d = np.sort(np.asarray(d_eigs, dtype=float))[::-1]
    r = np.sort(np.asarray(r_eigs, dtype=float))[::-1]
    nu = np.sort(np.asarray(nu_eigs, dtype=float))
    if nu.size != d.size:
        raise ConfigError("nu list must have one value per state-space dimension")
    omega = np.sort(np.concatenate([d, r]))[::-1]
    s3 = d.size
    a3_lo = np.concatenate([np.maximum(omega - s.theta_max, 0.0), np.full(s3, -s.theta_max)])
    a3_hi = np.concatenate([omega + s.theta_max, np.zeros(s3)])
    centres = np.concatenate([d, -nu])  # descending: psi's, then -nu from 0 downward
    a2_lo = centres - s.sigma_max
    a2_hi = centres + s.sigma_max
    a2_lo[:s3] = np.maximum(a2_lo[:s3], 0.0)
    a2_hi[s3:] = np.minimum(a2_hi[s3:], 0.0)
    return {Formulation.A3: Bands(Formulation.A3, a3_lo, a3_hi),
            Formulation.A2: Bands(Formulation.A2, a2_lo, a2_hi)}


# monotonicity along nested networks


@dataclass
class ChainStep:
    """One member of a nested chain: its summary and computed spectra."""

    p: int
    summary: SpectralSummary
    spectra: dict  # Formulation -> Spectrum
    network: object = None


@dataclass
class Verdict:
    name: str
    holds: bool | None  # None: not applicable at any step
    steps_checked: int
    worst_violation: float  # most adverse signed move, 0 if none
    note: str = ""


class _Tracker:
    def __init__(self, name, note=""):
        self.name = name
        self.note = note
        self.checked = 0
        self.worst = 0.0
        self.ok = True

    def expect_le(self, a, b, tol):
        """Record that ``a <= b`` (up to tol)."""
        self.checked += 1
        excess = a - b
        if excess > tol:
            self.ok = False
        self.worst = max(self.worst, excess)

    def verdict(self):
        return Verdict(self.name, self.ok if self.checked else None, self.checked,
                       self.worst, self.note)


def _extremes(spec: Spectrum):
    neg, pos = spec.negative(), spec.positive()
    return (neg[0] if neg.size else None, neg[-1] if neg.size else None,
            pos[0] if pos.size else None, pos[-1] if pos.size else None)


def monotonicity_report(chain, slack=MONOTONE_SLACK, diagonal_r=True):
    """Check the observation-monotonicity results along a nested chain.

    ``chain`` is an ordered list of :class:`ChainStep`; each step must add
    observations to the previous one. Tolerances are ``slack`` times the
    larger spectral norm of the two matrices compared. Claims that need a
    diagonal R are only evaluated when ``diagonal_r`` is true. Claims whose
    hypothesis fails at a step are skipped for that step; a claim skipped
    everywhere is reported with ``holds=None``.
    """
    for prev, cur in zip(chain, chain[1:]):
        if cur.p <= prev.p:
            raise ConfigError("chain is not strictly growing in observations")
        if prev.network is not None and cur.network is not None and not prev.network.issubset(cur.network):
            raise ConfigError("chain is not nested")

    T = {k: _Tracker(k, note) for k, note in [
        ("theta_extremes_grow", "theta_min and theta_max non-decreasing"),
        ("rho_extremes_spread", "rho_min non-increasing, rho_max non-decreasing"),
        ("nu_max_grows", "nu_max non-decreasing (diagonal R)"),
        ("a3_extreme_directions", "A3 negative extremes and largest positive move away from zero; smallest positive towards zero"),
        ("a2_extreme_directions", "A2 negative extremes move away from zero; positive extremes towards zero (diagonal R)"),
        ("a1_eigenvalues_grow", "every A1 eigenvalue non-decreasing (diagonal R)"),
        ("a3_positive_interval_expands", "A3 positive interval expands or is unchanged"),
        ("a3_negative_upper_bound_moves_out", "A3 negative upper bound moves away from zero when tau_max = psi_max"),
        ("a3_negative_lower_bound_moves_out", "A3 negative lower bound moves away from zero when tau_min = psi_min"),
        ("a2_negative_upper_bound_moves_out", "A2 negative upper bound (beta1 or beta3) moves away from zero"),
        ("a2_negative_lower_bound_moves_out", "A2 negative lower bound moves away from zero (diagonal R)"),
        ("a2_positive_inside_a3", "A2 positive interval inside A3 positive interval"),
        ("a1_upper_bound_grows", "A1 upper bound moves away from zero"),
    ]}

    for step in chain:
        b3, b2 = bounds_a3(step.summary), bounds_a2(step.summary)
        scale = max(b3.positive.hi, 1.0) * slack
        T["a2_positive_inside_a3"].expect_le(b3.positive.lo, b2.positive.lo, scale)
        T["a2_positive_inside_a3"].expect_le(b2.positive.hi, b3.positive.hi, scale)

    for prev, cur in zip(chain, chain[1:]):
        sp, sc = prev.summary, cur.summary
        tol_s = slack * max(sp.theta_max**2, sc.theta_max**2, sp.rho_max, sc.rho_max, sc.nu_max, 1.0)

        t = T["theta_extremes_grow"]
        t.expect_le(sp.theta_min, sc.theta_min, tol_s)
        t.expect_le(sp.theta_max, sc.theta_max, tol_s)
        t = T["rho_extremes_spread"]
        t.expect_le(sc.rho_min, sp.rho_min, tol_s)
        t.expect_le(sp.rho_max, sc.rho_max, tol_s)
        if diagonal_r:
            T["nu_max_grows"].expect_le(sp.nu_max, sc.nu_max, tol_s)

        sa, sb = prev.spectra.get(Formulation.A3), cur.spectra.get(Formulation.A3)
        if sa is not None and sb is not None:
            tol = slack * max(sa.norm, sb.norm)
            (nlo0, nhi0, plo0, phi0), (nlo1, nhi1, plo1, phi1) = _extremes(sa), _extremes(sb)
            t = T["a3_extreme_directions"]
            t.expect_le(nlo1, nlo0, tol)
            t.expect_le(nhi1, nhi0, tol)
            t.expect_le(plo1, plo0, tol)
            t.expect_le(phi0, phi1, tol)

        sa, sb = prev.spectra.get(Formulation.A2), cur.spectra.get(Formulation.A2)
        if diagonal_r and sa is not None and sb is not None:
            tol = slack * max(sa.norm, sb.norm)
            (nlo0, nhi0, plo0, phi0), (nlo1, nhi1, plo1, phi1) = _extremes(sa), _extremes(sb)
            t = T["a2_extreme_directions"]
            t.expect_le(nlo1, nlo0, tol)
            t.expect_le(nhi1, nhi0, tol)
            t.expect_le(plo1, plo0, tol)
            t.expect_le(phi1, phi0, tol)

        sa, sb = prev.spectra.get(Formulation.A1), cur.spectra.get(Formulation.A1)
        if diagonal_r and sa is not None and sb is not None:
            tol = slack * max(sa.norm, sb.norm)
            T["a1_eigenvalues_grow"].expect_le(float(np.max(sa.values - sb.values)), 0.0, tol)

        b3p, b3c = bounds_a3(sp), bounds_a3(sc)
        b2p, b2c = bounds_a2(sp), bounds_a2(sc)
        b1p, b1c = bounds_a1(sp), bounds_a1(sc)
        tol = slack * max(b3c.positive.hi, b2c.negative.lo * -1.0, b1c.positive.hi, 1.0)

        t = T["a3_positive_interval_expands"]
        t.expect_le(b3c.positive.lo, b3p.positive.lo, tol)
        t.expect_le(b3p.positive.hi, b3c.positive.hi, tol)

        if sp.tau_max == sp.psi_max and sc.tau_max == sc.psi_max:
            T["a3_negative_upper_bound_moves_out"].expect_le(b3c.negative.hi, b3p.negative.hi, tol)
        if sp.tau_min == sp.psi_min and sc.tau_min == sc.psi_min:
            T["a3_negative_lower_bound_moves_out"].expect_le(b3c.negative.lo, b3p.negative.lo, tol)

        t = T["a2_negative_upper_bound_moves_out"]
        if b2p.beta_choice in ("beta1", "beta3") and b2c.beta_choice in ("beta1", "beta3"):
            t.expect_le(b2c.negative.hi, b2p.negative.hi, tol)

        if diagonal_r:
            T["a2_negative_lower_bound_moves_out"].expect_le(b2c.negative.lo, b2p.negative.lo, tol)

        T["a1_upper_bound_grows"].expect_le(b1p.positive.hi, b1c.positive.hi, tol)

    return [tr.verdict() for tr in T.values()]
