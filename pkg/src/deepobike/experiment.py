"""Closed-loop experiments: offline data collection, episodes and sweeps.

Control structure: the plant input is ``u = u_fl + u_outer``. During data
collection ``u_outer`` is a Gaussian excitation; in adaptive runs it is
``K_t x_e + e_t`` with the DeePO gain and probing noise; in the baseline it
is zero. The outer-loop state is the tracking error
``x_e = [phi_r - phi, phi_r_dot - phi_dot]`` from noisy measurements.
"""
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import fl
from .config import ExperimentConfig, zeta_to_lambda
from .data_pipeline import TrajectoryLog, build_batch, pe_check
from .deepo import DeepoController, cost, parameterize, probing_noise
from .errors import Fallen, IllConditioned, NotStable, PeLost, Singularity
from .init_policy import RegularizedProblem, solve_regularized
from scipy.linalg import expm

from .plant import SOFT_FALL, BicyclePlant, linearize_upright, saturate

log = logging.getLogger(__name__)

RAD2DEG = 180.0 / math.pi
# rows: t, phi, phi_dot, delta, phi_r, phi_r_dot, u_total, u_fl, u_deepo, e_probe
BASE_COLUMNS = ("t", "phi", "phi_dot", "delta", "phi_r", "phi_r_dot",
                "u_total", "u_fl", "u_deepo", "e_probe")


def _streams(seed):
    """Independent generators for sensor noise, excitation and probing."""
    ss = np.random.SeedSequence(int(seed))
    sensor, excite, probe = ss.spawn(3)
    return (int(sensor.generate_state(1)[0]), np.random.default_rng(excite),
            np.random.default_rng(probe))


def _plant(config, sensor_seed):
    noise = replace(config.noise, seed=sensor_seed)
    return BicyclePlant(config.true_plant, noise=noise, dt=config.dt)


def _error_state(ref, y):
    return np.array([ref.y - y[0], ref.y_dot - y[1]])


def collect_offline(config):
    """Run the FL loop with additive excitation on a zero reference.

    Returns the last ``offline_T`` samples of (outer input, error state,
    successor error state). Raises :class:`PeLost` if they are not
    persistently exciting.
    """
    sensor_seed, excite, _ = _streams(config.seed)
    plant = _plant(config, sensor_seed)
    steps = int(round(config.offline_duration / config.dt))
    ref = fl.Reference()
    inputs = np.empty(steps)
    states = np.empty((steps + 1, 2))
    y = plant.y
    for k in range(steps):
        x = _error_state(ref, y)
        u_pe = config.sigma_pe * excite.standard_normal() if config.sigma_pe > 0 else 0.0
        u_fl = fl.compute(y, ref, config.fl)
        states[k] = x
        inputs[k] = u_pe
        y = plant.step(u_fl + u_pe)
    states[steps] = _error_state(ref, y)
    data = TrajectoryLog.from_samples(inputs[None, :], states.T).tail(config.offline_T)
    pe = pe_check(data)
    if not pe.ok:
        raise PeLost(f"offline data not persistently exciting (sigma_min={pe.min_singular_value:.3e})")
    return data


def initial_policy(config, data):
    cov = build_batch(data, config.offline_lam)
    prob = RegularizedProblem(cov, config.deepo.Q, config.deepo.R, config.gamma)
    return solve_regularized(prob)


@dataclass
class EpisodeRecord:
    columns: dict
    summary: dict = field(default_factory=dict)

    @property
    def rows(self):
        return len(self.columns["t"])

    def to_csv(self, path):
        from .report import write_episode_csv
        write_episode_csv(self, path)


def _gain_names(m, n):
    return [f"K{i}{j}" for i in range(m) for j in range(n)]


def run_episode(config, policy0=None, offline=None):
    """Simulate one closed-loop episode at ``1 / dt`` Hz.

    ``config.mode`` selects the outer loop: ``run_deepo`` (needs ``policy0``
    and the offline data that produced it) or ``run_fl_only``. A fall ends the
    episode early and is recorded in the summary.
    """
    t0 = time.perf_counter()
    deepo_on = config.mode == "run_deepo"
    if deepo_on and (policy0 is None or offline is None):
        raise ValueError("run_deepo needs the initial policy and offline data")
    sensor_seed, _, probe_rng = _streams(config.seed)
    plant = _plant(config, sensor_seed)
    steps = config.steps
    dcfg = config.deepo
    m, n = 1, 2
    ctrl = None
    if deepo_on:
        cov0 = build_batch(offline, config.offline_lam)
        ctrl = DeepoController(cov0, policy0, dcfg)
        cov0.lam = dcfg.lam

    buf = np.full((steps, len(BASE_COLUMNS) + m * n + 1), np.nan)
    fell = False
    fail_reason = ""
    max_abs_phi = 0.0
    prev = None
    y = plant.y
    k_done = 0
    for k in range(steps):
        t = k * config.dt
        ref = fl.reference_signal(t, config.reference)
        x = _error_state(ref, y)
        cost_t = np.nan
        if ctrl is not None and prev is not None:
            ctrl.observe(prev[0], prev[1], x)
        try:
            u_fl = fl.compute(y, ref, config.fl)
        except Singularity as exc:
            fell, fail_reason = True, str(exc)
            break
        u_d = e = 0.0
        if ctrl is not None:
            u_d = float(ctrl.control(x)[0])
            e = float(probing_noise(u_d, dcfg.probe_scale, probe_rng, dcfg.sigma_floor)[0])
            cost_t = _applied_cost(ctrl)
        u_outer = u_d + e
        u_total = saturate(u_fl + u_outer)
        xs = plant.x
        max_abs_phi = max(max_abs_phi, abs(xs[0]))
        K = ctrl.policy.K.ravel() if ctrl is not None else np.zeros(m * n)
        buf[k, :len(BASE_COLUMNS)] = (t, xs[0], xs[1], xs[2], ref.y, ref.y_dot,
                                      u_total, u_fl, u_d, e)
        buf[k, len(BASE_COLUMNS):-1] = K
        buf[k, -1] = cost_t
        k_done = k + 1
        prev = (u_outer, x)
        try:
            y = plant.step(u_fl + u_outer)
        except (Fallen, Singularity) as exc:
            fell, fail_reason = True, str(exc)
            break
    names = list(BASE_COLUMNS) + _gain_names(m, n) + ["J"]
    columns = {name: buf[:k_done, i].copy() for i, name in enumerate(names)}
    summary = {
        "mode": config.mode,
        "seed": int(config.seed),
        "steps": k_done,
        **ise(columns),
        "fell": fell,
        "soft_fail": bool(fell or max_abs_phi > SOFT_FALL),
        "max_abs_phi_deg": max_abs_phi * RAD2DEG,
        "resets": ctrl.resets if ctrl is not None else 0,
        "fail_reason": fail_reason,
        "wall_time": time.perf_counter() - t0,
    }
    return EpisodeRecord(columns=columns, summary=summary)


def ise(columns):
    """Integrated squared tracking errors in deg^2 and (deg/s)^2."""
    e_phi = (columns["phi"] - columns["phi_r"]) * RAD2DEG
    e_rate = (columns["phi_dot"] - columns["phi_r_dot"]) * RAD2DEG
    return {"ISE_phi": float(np.sum(e_phi * e_phi)), "ISE_phi_dot": float(np.sum(e_rate * e_rate))}


def _applied_cost(ctrl):
    if ctrl.t == 0 or ctrl.cov.fresh < ctrl.cov.Phi.shape[0]:
        return np.nan
    try:
        V = parameterize(ctrl.policy.K, ctrl.cov)
        return cost(V, ctrl.cov, ctrl.config.Q, ctrl.config.R)
    except (NotStable, IllConditioned):
        return np.nan


def linearized_closed_loop(config, K):
    """Sampled closed loop of the true plant, linearized FL and outer gain ``K``.

    Returns ``(Acl, rho)`` with the plant discretized by zero-order hold at
    ``config.dt`` and ``u = u_fl(y) + K x_e`` evaluated on the sampled state.
    """
    A, B = linearize_upright(config.true_plant, actuator=True)
    nx = A.shape[0]
    M = np.zeros((nx + 1, nx + 1))
    M[:nx, :nx] = A * config.dt
    M[:nx, nx:] = B * config.dt
    E = expm(M)
    Ad, Bd = E[:nx, :nx], E[:nx, nx:]
    mdl, k1, k2 = config.fl.model, config.fl.k1, config.fl.k2
    p = mdl.a * mdl.v / (mdl.b * mdl.h)
    # u_fl = (w - f) / p with w = -k2 phi - k1 phi_dot and f linearized at zero
    F = np.zeros((1, nx))
    F[0, 0] = -(k2 + mdl.g / mdl.h) / p
    F[0, 1] = -k1 / p
    F[0, 2] = -mdl.centrifugal_sign * mdl.v**2 / (mdl.b * mdl.h) / p
    C = np.zeros((2, nx))
    C[0, 0] = C[1, 1] = 1.0
    # x_e = -C x on a zero reference
    Acl = Ad + Bd @ (F - np.atleast_2d(K) @ C)
    return Acl, float(np.abs(np.linalg.eigvals(Acl)).max())


def derive_seed(base, *keys):
    """Deterministic child seed for (base seed, key...)."""
    return int(np.random.SeedSequence([int(base), *map(int, keys)]).generate_state(1)[0])


def prepare(config):
    """Offline data and the regularized initial policy for ``config.seed``."""
    data = collect_offline(config)
    return data, initial_policy(config, data)


AXES = {
    "xi": (1, 10, 50, 100),
    "zeta": (math.inf, 2, 3, 4, 5, 6),
}
BASELINE = "FL"


def cell_config(config, axis, value):
    if value == BASELINE:
        return config.with_(mode="run_fl_only")
    if axis == "xi":
        return config.with_(mode="run_deepo", deepo=replace(config.deepo, xi=int(value)))
    if axis == "zeta":
        return config.with_(mode="run_deepo",
                            deepo=replace(config.deepo, xi=1, lam=zeta_to_lambda(value)))
    raise ValueError(f"unknown sweep axis {axis!r}")


@dataclass
class SweepCell:
    axis: str
    value: object
    records: list = field(default_factory=list)
    failures: int = 0

    @property
    def label(self):
        if self.value == BASELINE:
            return BASELINE
        if isinstance(self.value, float) and math.isinf(self.value):
            return "inf"
        return f"{self.value:g}"

    def stats(self):
        done = [r for r in self.records if not r.summary["fell"]]
        n_total = len(self.records) + self.failures
        phi = np.array([r.summary["ISE_phi"] for r in done])
        rate = np.array([r.summary["ISE_phi_dot"] for r in done])
        return {
            "axis": self.axis,
            "value": self.label,
            "episodes": n_total,
            "mean_ISE_phi": float(phi.mean()) if phi.size else math.nan,
            "std_ISE_phi": float(phi.std()) if phi.size else math.nan,
            "mean_ISE_phi_dot": float(rate.mean()) if rate.size else math.nan,
            "std_ISE_phi_dot": float(rate.std()) if rate.size else math.nan,
            "fall_rate": (n_total - len(done)) / n_total if n_total else math.nan,
        }


@dataclass
class SweepReport:
    axis: str
    cells: list

    def summary_rows(self):
        return [c.stats() for c in self.cells]


def _run_job(job):
    cfg, policy, data = job
    try:
        return run_episode(cfg, policy, data)
    except (Fallen, Singularity) as exc:
        log.warning("episode seed=%d failed: %s", cfg.seed, exc)
        return None


def sweep(config, axis, values=None, repeats=5, workers=None, include_baseline=True):
    """Run every (cell, repeat) episode of a parameter sweep.

    Repeat ``r`` uses seed ``derive_seed(config.seed, r)`` in every cell, so
    cells are compared on identical sensor-noise realizations and share one
    offline dataset and initial policy. Falls are counted, not raised.
    """
    values = list(AXES[axis] if values is None else values)
    if include_baseline:
        values = [BASELINE] + values
    cells = [SweepCell(axis, v) for v in values]
    seeds = [derive_seed(config.seed, r) for r in range(repeats)]
    prepared = {}
    for r, s in enumerate(seeds):
        try:
            prepared[r] = prepare(config.with_(seed=s))
        except (Fallen, Singularity, PeLost) as exc:
            log.warning("repeat %d: offline phase failed: %s", r, exc)
    jobs, slots = [], []
    for ci, cell in enumerate(cells):
        for r, s in enumerate(seeds):
            if r not in prepared:
                cell.failures += 1
                continue
            data, policy = prepared[r]
            jobs.append((cell_config(config, axis, cell.value).with_(seed=s), policy, data))
            slots.append(ci)
    workers = workers or min(len(jobs), os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    for ci, rec in zip(slots, results):
        if rec is None:
            cells[ci].failures += 1
        else:
            cells[ci].records.append(rec)
    return SweepReport(axis, cells)
