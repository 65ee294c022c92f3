"""Identical-twin experiments over observation networks a-f and the table,
figure and verification artifacts built from them."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bounds import (ChainStep, an_inputs, bounds_a1, bounds_a2, bounds_a3, bounds_an,
                     check_containment, individual_bounds, monotonicity_report)
from .covariance import BlockDiagCovariance, CovarianceSpec, build_D, build_R, sample_gaussian, soar_matrix
from .errors import ConfigError
from .krylov import SolverConfig, cg, minres
from .lorenz96 import ModelConfig, Trajectory, integrate, spin_up
from .operators import (BlockOperators, Formulation, ObservationNetwork, assemble_dense,
                        make_system, recover_increment)
from .spectral import Spectrum, component_spectra, summarize, sym_eig

NETWORK_IDS = ("a", "b", "c", "d", "e", "f")
TABLE_NETWORKS = ("a", "c", "e", "f")
OUTPUT_ENV = "WC4DVAR_OUTPUT"
BOUND_FUNCS = {Formulation.A3: bounds_a3, Formulation.A2: bounds_a2, Formulation.A1: bounds_a1}


def build_network(net_id, n=40, N=15) -> ObservationNetwork:
    """Named observation networks; component 0 is the first model variable.

    a: first variable at the final time. b: every 8th variable at
    t3, t7, t11, ... c: every 4th variable at odd times. d: every 2nd
    variable at odd times. e: every 2nd variable at every time. f: all.
    """
    times = range(N + 1)
    if net_id == "a":
        pairs = [(N, 0)]
    elif net_id == "b":
        pairs = [(t, j) for t in range(3, N + 1, 4) for j in range(0, n, 8)]
    elif net_id == "c":
        pairs = [(t, j) for t in range(1, N + 1, 2) for j in range(0, n, 4)]
    elif net_id == "d":
        pairs = [(t, j) for t in range(1, N + 1, 2) for j in range(0, n, 2)]
    elif net_id == "e":
        pairs = [(t, j) for t in times for j in range(0, n, 2)]
    elif net_id == "f":
        return ObservationNetwork.full(n, N)
    else:
        raise ConfigError(f"unknown network id {net_id!r} (expected one of {', '.join(NETWORK_IDS)})")
    return ObservationNetwork.from_pairs(n, N, pairs)


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    covariance: CovarianceSpec = field(default_factory=CovarianceSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    network: str = "f"
    seed: int = 1
    spinup_steps: int = 1000
    # multiplies every noise draw; 0 gives a noise-free twin with b = d = 0
    noise_scale: float = 1.0
    eig_method: str = "lapack"
    alt_sigma_o: float = 1.5
    alt_sigma_b: float = 1.0
    alt_network: str = "d"

    def __post_init__(self):
        if self.spinup_steps < 0:
            raise ConfigError("spinup_steps must be non-negative")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be non-negative")
        if self.eig_method not in ("jacobi", "lapack"):
            raise ConfigError(f"unknown eig_method {self.eig_method!r}")

    def alt(self):
        """The larger-variance scenario used for the alternative-bound tables."""
        cov = replace(self.covariance, sigma_o=self.alt_sigma_o, sigma_b=self.alt_sigma_b)
        return replace(self, covariance=cov, network=self.alt_network)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kw = {}
        sections = {"model": ModelConfig, "covariance": CovarianceSpec, "solver": SolverConfig}
        for key, typ in sections.items():
            if key in data:
                try:
                    kw[key] = typ(**data.pop(key))
                except TypeError as exc:
                    raise ConfigError(f"[{key}]: {exc}") from None
        try:
            return cls(**kw, **data.pop("experiment", {}), **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        out = asdict(self)
        exp = {k: out.pop(k) for k in list(out) if k not in ("model", "covariance", "solver")}
        out["experiment"] = exp
        return out


@dataclass
class TwinData:
    cfg: ExperimentConfig
    truth: Trajectory
    background: np.ndarray
    forecast: Trajectory  # perfect-model run from the background: the linearisation trajectory
    observations: np.ndarray  # (N+1, n) noisy values of every component; networks subset these
    B: np.ndarray

    @property
    def n(self):
        return self.cfg.model.n

    @property
    def steps(self):
        return self.cfg.model.steps

    def network(self, net_id=None):
        return build_network(net_id or self.cfg.network, self.n, self.steps)

    def D(self):
        return build_D(self.B, self.B, self.steps)

    def operators(self, network: ObservationNetwork) -> BlockOperators:
        R = build_R(network, self.cfg.covariance.sigma_o) if network.p else None
        return BlockOperators(self.forecast.stages, network, self.D(), R)

    def rhs(self, ops: BlockOperators):
        """``b = (x0 - xb, -eta_1, ..., -eta_N)`` and ``d = y - H x``."""
        fc = self.forecast
        b = np.concatenate([fc.states[0] - self.background, -fc.model_error.ravel()])
        d = self.observations.ravel()[ops.network.flat_indices()] - ops.apply_H(fc.states.ravel())
        return b, d

    def system(self, network, formulation):
        ops = self.operators(network)
        return make_system(ops, formulation, *self.rhs(ops))


def run_twin(cfg: ExperimentConfig) -> TwinData:
    """Truth, background, forecast and observations for one master seed.

    The seed is split into independent streams for the spin-up, the
    truth's model errors, the background error and the observation
    errors. Observation errors are drawn for every component at every
    time, so all networks see the same truth and the same noise.
    """
    m, c = cfg.model, cfg.covariance
    ss_spin, ss_model, ss_bg, ss_obs = np.random.SeedSequence(cfg.seed).spawn(4)
    B = soar_matrix(m.n, c)
    rng = np.random.default_rng(ss_spin)
    x0 = spin_up(m.forcing + 0.01 * rng.standard_normal(m.n), m, cfg.spinup_steps)
    q = BlockDiagCovariance([B] * m.steps)
    eta = cfg.noise_scale * sample_gaussian(q, ss_model).reshape(m.steps, m.n)
    truth = integrate(x0, m, eta)
    xb = x0 + cfg.noise_scale * sample_gaussian(BlockDiagCovariance([B]), ss_bg)
    forecast = integrate(xb, m)
    obs_noise = cfg.noise_scale * c.sigma_o * np.random.default_rng(ss_obs).standard_normal(truth.states.shape)
    return TwinData(cfg, truth, xb, forecast, truth.states + obs_noise, B)


@dataclass
class NetworkAnalysis:
    net_id: str
    ops: BlockOperators
    summary: object
    spectra: dict  # Formulation -> Spectrum
    bounds: dict  # Formulation -> BoundsReport (with containment)
    components: object = None
    an_bounds: dict | None = None

    @property
    def contained(self):
        reports = list(self.bounds.values()) + list((self.an_bounds or {}).values())
        return all(r.containment.contained for r in reports)


def analyse(twin: TwinData, net_id=None, network=None, formulations=tuple(Formulation),
            with_an=False, method=None) -> NetworkAnalysis:
    """Dense spectra, spectral summary and interval bounds for one network."""
    method = method or twin.cfg.eig_method
    network = network or twin.network(net_id)
    ops = twin.operators(network)
    comp = component_spectra(ops, method)
    summary = summarize(ops, method, comp)
    spectra, bounds = {}, {}
    for f in formulations:
        f = Formulation(f)
        spectra[f] = sym_eig(assemble_dense(ops, f), method, name=str(f))
        bounds[f] = check_containment(BOUND_FUNCS[f](summary), spectra[f])
    an = None
    if with_an:
        A1 = assemble_dense(ops, Formulation.A1)
        L = ops.dense_L()
        ldl = L.T @ ops.D.solve_matrix(L)
        extra = an_inputs(A1, 0.5 * (ldl + ldl.T), method)
        an = bounds_an(summary, extra)
        an = {f: check_containment(r, spectra[f]) for f, r in an.items() if f in spectra}
    return NetworkAnalysis(net_id or "custom", ops, summary, spectra, bounds, comp, an)


def solve(twin: TwinData, network, formulation, solver: SolverConfig | None = None):
    """Solve one formulation: MINRES for the saddle-point systems, CG for A1."""
    solver = solver or twin.cfg.solver
    system = twin.system(network, formulation)
    method = cg if system.formulation is Formulation.A1 else minres
    x, log = method(system, system.rhs, solver)
    return recover_increment(system, x), log


# tables


TABLE_COLUMNS = ["network", "variant", "neg_bound_lo", "neg_bound_hi", "neg_eig_min", "neg_eig_max",
                 "pos_bound_lo", "pos_bound_hi", "pos_eig_min", "pos_eig_max", "verdict"]


def table_row(net_id, report, spectrum: Spectrum):
    neg, pos = spectrum.negative(), spectrum.positive()
    row = {
        "network": net_id,
        "variant": report.variant,
        "neg_bound_lo": report.negative.lo if report.negative else None,
        "neg_bound_hi": report.negative.hi if report.negative else None,
        "neg_eig_min": float(neg[0]) if neg.size else None,
        "neg_eig_max": float(neg[-1]) if neg.size else None,
        "pos_bound_lo": report.positive.lo,
        "pos_bound_hi": report.positive.hi,
        "pos_eig_min": float(pos[0]) if pos.size else None,
        "pos_eig_max": float(pos[-1]) if pos.size else None,
        "verdict": "CONTAINED" if report.containment.contained else "VIOLATED",
    }
    return row


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v))
                        for k, v in row.items()})


def output_dir(path=None):
    out = Path(path or os.environ.get(OUTPUT_ENV) or "outputs")
    out.mkdir(parents=True, exist_ok=True)
    return out


def reproduce_tables(cfg: ExperimentConfig, outdir=None, networks=TABLE_NETWORKS):
    """Interval tables: ``table2``-``table4`` hold the A3, A2 and A1 bounds
    per network; ``table5`` and ``table6`` hold the alternative scenario with
    both the standard and the Axelsson-Neytcheva bounds. Returns the rows and
    the analyses keyed by network id (``"alt"`` for the scenario)."""
    twin = run_twin(cfg)
    tables = {"table2": [], "table3": [], "table4": [], "table5": [], "table6": []}
    analyses = {}
    for net in networks:
        res = analyse(twin, net)
        analyses[net] = res
        for key, f in (("table2", Formulation.A3), ("table3", Formulation.A2), ("table4", Formulation.A1)):
            tables[key].append(table_row(net, res.bounds[f], res.spectra[f]))
    alt_cfg = cfg.alt()
    alt = analyse(run_twin(alt_cfg), alt_cfg.network,
                  formulations=(Formulation.A3, Formulation.A2), with_an=True)
    analyses["alt"] = alt
    for key, f in (("table5", Formulation.A3), ("table6", Formulation.A2)):
        tables[key].append(table_row(alt_cfg.network, alt.bounds[f], alt.spectra[f]))
        tables[key].append(table_row(alt_cfg.network, alt.an_bounds[f], alt.spectra[f]))
    if outdir is not None:
        out = output_dir(outdir)
        for key, rows in tables.items():
            write_rows(out / f"{key}.csv", rows)
    return tables, analyses


def write_network_artifacts(out, res: NetworkAnalysis, logs=None):
    for f, spec in res.spectra.items():
        spec.to_csv(out / f"spectrum_{f}_{res.net_id}.csv")
        payload = res.bounds[f].to_dict()
        payload["summary"] = res.summary.as_dict()
        payload["inertia"] = list(spec.counts)
        if res.an_bounds and f in res.an_bounds:
            payload["axelsson_neytcheva"] = res.an_bounds[f].to_dict()
        (out / f"bounds_{f}_{res.net_id}.json").write_text(json.dumps(payload, indent=2))
    for f, log in (logs or {}).items():
        log.to_csv(out / f"residuals_{f}_{res.net_id}.csv")


def reproduce_figures(cfg: ExperimentConfig, outdir=None, networks=NETWORK_IDS):
    """Full spectra with bounds and solver residual curves for every network."""
    twin = run_twin(cfg)
    out = output_dir(outdir) if outdir is not None else None
    results = {}
    for net in networks:
        res = analyse(twin, net)
        logs = {f: solve(twin, res.ops.network, f)[1] for f in Formulation}
        results[net] = (res, logs)
        if out is not None:
            write_network_artifacts(out, res, logs)
    return results


# nested chains


def single_step_chain(start: ObservationNetwork, stop: ObservationNetwork, max_steps=None):
    """Networks from ``start`` towards ``stop``, adding one of the missing
    observations at a time in (time, component) order."""
    if not start.issubset(stop):
        raise ConfigError("start network is not contained in stop network")
    have = set(start.pairs())
    missing = [pr for pr in stop.pairs() if pr not in have]
    if max_steps is not None:
        missing = missing[:max_steps]
    chain = [start]
    for t, j in missing:
        chain.append(chain[-1].with_observation(t, j))
    return chain


def chain_steps(twin: TwinData, networks, formulations=tuple(Formulation), method=None):
    method = method or twin.cfg.eig_method
    steps = []
    for net in networks:
        ops = twin.operators(net)
        summary = summarize(ops, method)
        spectra = {Formulation(f): sym_eig(assemble_dense(ops, f), method) for f in formulations}
        steps.append(ChainStep(net.p, summary, spectra, net))
    return steps


def monotonicity(twin: TwinData, networks, method=None):
    return monotonicity_report(chain_steps(twin, networks, method=method))


# verification suite


def verify(cfg: ExperimentConfig, outdir=None, net_id=None, chain_steps_per_link=2):
    """Property suite for one network: inertia, containment, per-eigenvalue
    bands, the distinct-eigenvalue count, solver convergence (reported),
    TLM/adjoint identity and a short single-observation monotonicity chain.
    Returns ``(ok, summary_dict)``; ``ok`` is False on any failed check."""
    twin = run_twin(cfg)
    net_id = net_id or cfg.network
    res = analyse(twin, net_id)
    ops = res.ops
    s, p = ops.s, ops.p
    checks = {}
    expected = {Formulation.A3: (s + p, s, 0), Formulation.A2: (s, s, 0), Formulation.A1: (s, 0, 0)}
    for f, spec in res.spectra.items():
        checks[f"inertia_{f}"] = list(spec.counts) == list(expected[f])
        checks[f"containment_{f}"] = res.bounds[f].containment.contained
    bands = individual_bounds(res.summary, res.components.d, res.components.r, res.components.nu)
    for f, band in bands.items():
        checks[f"bands_{f}"] = band.check(res.spectra[f]).contained
    if p < s:
        checks["distinct_A2_count"] = res.spectra[Formulation.A2].count_in(-110.0, -90.0) == p

    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(20):
        u, v = rng.standard_normal(s), rng.standard_normal(s)
        lu = ops.apply_L(u)
        worst = max(worst, abs(lu @ v - u @ ops.apply_Lt(v)) / (np.linalg.norm(lu) * np.linalg.norm(v)))
    checks["adjoint_identity"] = worst <= 1e-12

    solves = {}
    for f in Formulation:
        _, log = solve(twin, ops.network, f)
        solves[str(f)] = {"iterations": log.iterations, "converged": log.converged,
                          "final_relative_residual": log.final}
        if f is not Formulation.A1:
            checks[f"minres_monotone_{f}"] = bool(np.all(np.diff(log.relative_residuals) <= 1e-12))

    chain = [ops.network]
    if p < s:
        full = ObservationNetwork.full(twin.n, twin.steps)
        chain = single_step_chain(ops.network, full, chain_steps_per_link)
    mono = []
    if len(chain) > 1:
        mono = monotonicity(twin, chain)
        for v in mono:
            if v.holds is not None:
                checks[f"monotone_{v.name}"] = v.holds

    ok = all(checks.values())
    summary = {
        "network": net_id,
        "seed": cfg.seed,
        "ok": ok,
        "checks": {k: bool(v) for k, v in checks.items()},
        "solves": solves,
        "spectral_summary": res.summary.as_dict(),
        "monotonicity": [asdict(v) for v in mono],
    }
    if outdir is not None:
        out = output_dir(outdir)
        (out / "verify.json").write_text(json.dumps(summary, indent=2))
        write_network_artifacts(out, res)
    return ok, summary
