"""Multi-trial studies: phase diagram, critical density, delay scaling,
component-diameter tails, and single-hop delay distribution tests.

Every trial is keyed by a derived seed, so results are independent of worker
count and evaluation order.
"""

from __future__ import annotations

import math
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats
from scipy.optimize import brentq, curve_fit

from .delay import RateFit, RatioCurve, fit_scaling_rate, flood, mmd_ratio_curve
from .geometry import BoxRegion
from .graph import (build_comm_graph, build_topo_graph, crossing_exists,
                    disk_graph_edges, giant_component)
from .opportunity import Estimate, estimate_p0, has_bidirectional_opportunity, \
    OpportunityContext, pair_region
from .pointprocess import (SeededRng, SimulationParams, sample_poisson_points,
                           sample_primary_slot, sample_secondary_network)

DISCONNECTED = "disconnected"
INTERMITTENT = "intermittently-connected"
INSTANTANEOUS = "instantaneously-connected"

DEFAULT_BANDS = ((0.5, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, 5.0))
BOOTSTRAP_RESAMPLES = 200

# bare container that quacks like a graph for crossing checks
_PlainGraph = namedtuple("_PlainGraph", ["points", "edges"])


def parallel_map(fn, items, workers: int = 1):
    """Order-preserving map, optionally across processes."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# critical density via finite-size crossing probabilities

@dataclass
class CriticalDensityResult:
    lambda_c_hat: float
    ci_low: float
    ci_high: float
    # one row per (window side, lambda): estimated crossing probability
    rows: list[tuple[float, float, float, int]]


def _critical_cell(args):
    lam, window_side, r_p, trials, seeds = args
    region = BoxRegion.square(window_side / 2)
    hits = 0
    for t in range(trials):
        gen = seeds.generator("points", t)
        points = sample_poisson_points(lam, region, gen)
        g = _PlainGraph(points, disk_graph_edges(points, r_p))
        if crossing_exists(g, region, "left-right", r_p):
            hits += 1
    return hits


def _logistic(lam, mid, width):
    return special.expit((lam - mid) / width)


def _fit_logistic(lams, probs):
    span = (lams[-1] - lams[0]) or 1.0
    popt, _ = curve_fit(_logistic, lams, probs,
                        p0=(float(np.median(lams)), span / 6),
                        maxfev=20000)
    return popt


def _intersect_fits(fits, lam_lo, lam_hi):
    """Crossing point of the per-window logistic curves (pairwise, averaged)."""
    points = []
    for i in range(len(fits)):
        for j in range(i + 1, len(fits)):
            fi, fj = fits[i], fits[j]
            def diff(lam):
                return _logistic(lam, *fi) - _logistic(lam, *fj)
            grid = np.linspace(lam_lo, lam_hi, 512)
            vals = diff(grid)
            sign = np.sign(vals)
            idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
            if len(idx):
                k = idx[0]
                points.append(brentq(diff, grid[k], grid[k + 1]))
            else:
                # nearly parallel curves: fall back to the p = 0.5 midpoints
                points.append(0.5 * (fi[0] + fj[0]))
    return float(np.mean(points))


def estimate_critical_density(r_p: float, window_sides, lambdas, trials: int,
                              rng: SeededRng, workers: int = 1,
                              bootstrap: int = BOOTSTRAP_RESAMPLES) -> CriticalDensityResult:
    """Estimate the percolation density of the r_p-disk graph.

    For each window side and density, measures the left-right crossing
    probability of the sampled window; the per-window logistic fits intersect
    near the critical density. The confidence interval is a parametric
    bootstrap over the binomial cell counts.
    """
    window_sides = list(window_sides)
    lambdas = np.asarray(sorted(lambdas), dtype=float)
    if len(window_sides) < 2:
        raise ValueError("need at least 2 window sides")
    jobs = []
    for wi, side in enumerate(window_sides):
        for li, lam in enumerate(lambdas):
            jobs.append((float(lam), float(side), r_p, trials,
                         rng.child("critical", wi, li)))
    hits = parallel_map(_critical_cell, jobs, workers)
    probs = np.array(hits, dtype=float).reshape(len(window_sides), len(lambdas)) / trials

    rows = []
    for wi, side in enumerate(window_sides):
        for li, lam in enumerate(lambdas):
            rows.append((float(side), float(lam), float(probs[wi, li]), trials))
        if not (probs[wi].min() < 0.5 < probs[wi].max()):
            raise ValueError(
                f"crossing probabilities for window {side} do not bracket 0.5; "
                "widen the lambda range")

    fits = [_fit_logistic(lambdas, probs[wi]) for wi in range(len(window_sides))]
    lam_hat = _intersect_fits(fits, lambdas[0], lambdas[-1])

    boot_gen = rng.generator("critical-bootstrap")
    samples = []
    for _ in range(bootstrap):
        resampled = boot_gen.binomial(trials, probs) / trials
        try:
            bfits = [_fit_logistic(lambdas, resampled[wi])
                     for wi in range(len(window_sides))]
            samples.append(_intersect_fits(bfits, lambdas[0], lambdas[-1]))
        except RuntimeError:
            continue
    if samples:
        lo, hi = np.percentile(samples, [2.5, 97.5])
    else:
        lo = hi = lam_hat
    return CriticalDensityResult(lam_hat, float(lo), float(hi), rows)


# ---------------------------------------------------------------------------
# phase diagram

@dataclass
class PhaseCell:
    lambda_s: float
    lambda_pt: float
    theta: float
    stderr: float
    classification: str


@dataclass
class PhaseDiagramResult:
    lambda_s_values: list[float]
    lambda_pt_values: list[float]
    cells: list[PhaseCell]
    # per lambda_s column: largest lambda_pt with theta significantly > 0
    boundary: dict[float, float | None]


def _phase_cell(args):
    params, region, trials, seeds = args
    central = region.shrunk(params.r_p)
    fracs = np.zeros(trials)
    topo_giant = 0
    comm_giant = 0
    for t in range(trials):
        stream = seeds.child("trial", t)
        network = sample_secondary_network(params, region, stream)
        topo = build_topo_graph(network, params.r_p)
        if giant_component(topo, region) is not None:
            topo_giant += 1
        realization = sample_primary_slot(params, region, 0, stream)
        comm = build_comm_graph(topo, realization, params)
        giant = giant_component(comm, region)
        if giant is None:
            continue
        comm_giant += 1
        in_box = central.contains(network.points)
        if in_box.any():
            fracs[t] = np.mean(comm.component_label[in_box] == giant)
    theta = float(np.mean(fracs))
    stderr = float(np.std(fracs, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return theta, stderr, topo_giant / trials, comm_giant == trials


def run_phase_diagram(params_template: SimulationParams, region: BoxRegion,
                      lambda_s_values, lambda_pt_values, trials: int,
                      rng: SeededRng, workers: int = 1) -> PhaseDiagramResult:
    """theta estimates and regime classification over a (lambda_S, lambda_PT) grid.

    A cell is disconnected when the topological graph fails to span the window
    in a majority of trials; instantaneously connected when the communication
    graph has a spanning component in every probed slot and theta - 2*stderr > 0;
    otherwise intermittently connected.
    """
    ls = [float(v) for v in lambda_s_values]
    lp = [float(v) for v in lambda_pt_values]
    if not ls or not lp:
        raise ValueError("grid must be non-empty")
    jobs = []
    for i, lam_s in enumerate(ls):
        for j, lam_pt in enumerate(lp):
            params = params_template.replace(lambda_s=lam_s, lambda_pt=lam_pt)
            jobs.append((params, region, trials, rng.child("phase", i, j)))
    results = parallel_map(_phase_cell, jobs, workers)

    cells = []
    boundary: dict[float, float | None] = {}
    k = 0
    for i, lam_s in enumerate(ls):
        best = None
        for j, lam_pt in enumerate(lp):
            theta, stderr, topo_frac, comm_always = results[k]
            k += 1
            connected = theta - 2 * stderr > 0
            if topo_frac < 0.5:
                cls = DISCONNECTED
            elif comm_always and connected:
                cls = INSTANTANEOUS
            else:
                cls = INTERMITTENT
            if connected:
                best = lam_pt if best is None else max(best, lam_pt)
            cells.append(PhaseCell(lam_s, lam_pt, theta, stderr, cls))
        boundary[lam_s] = best
    return PhaseDiagramResult(ls, lp, cells, boundary)


# ---------------------------------------------------------------------------
# MMD scaling study (Fig. 5 style)

@dataclass
class TauStudy:
    tau: float
    distances: np.ndarray
    ratios: np.ndarray
    fits: list[RateFit | None]
    rate_far: float | None       # beta-hat (tau = 0) or gamma-hat (tau > 0)
    rate_far_ci: tuple[float, float] | None
    n_horizon: int
    n_unreachable: int
    n_resampled_sources: int


@dataclass
class ScalingStudyResult:
    bands: list[tuple[float, float]]
    studies: list[TauStudy]

    def for_tau(self, tau: float) -> TauStudy:
        for s in self.studies:
            if s.tau == tau:
                return s
        raise KeyError(tau)


def _scaling_flood(args):
    params, region, horizon, seeds = args
    network = sample_secondary_network(params, region, seeds.child("network"))
    topo = build_topo_graph(network, params.r_p)
    cx, cy = region.center
    d_center = np.hypot(network.points[:, 0] - cx, network.points[:, 1] - cy)
    order = np.argsort(d_center, kind="stable")
    giant = giant_component(topo, region)
    resampled = False
    source = int(order[0])
    if giant is not None and topo.component_label[source] != giant:
        in_giant = topo.component_label[order] == giant
        source = int(order[in_giant][0])
        resampled = True
    result = flood(network, topo, source, params, horizon, seeds.child("flood"))
    curve = mmd_ratio_curve(result, network)
    return curve.distances, curve.ratios, curve.n_horizon, curve.n_unreachable, resampled


def _median_bootstrap_ci(values: np.ndarray, gen: np.random.Generator,
                         resamples: int = BOOTSTRAP_RESAMPLES):
    meds = [float(np.median(gen.choice(values, size=len(values))))
            for _ in range(resamples)]
    lo, hi = np.percentile(meds, [2.5, 97.5])
    return float(lo), float(hi)


def run_scaling_study(params: SimulationParams, region: BoxRegion, taus,
                      horizon: int, n_sources: int, rng: SeededRng,
                      bands=DEFAULT_BANDS, workers: int = 1) -> ScalingStudyResult:
    """Flood from a central source and fit MMD-to-distance rates per band.

    The source is the node nearest the region center; if it falls outside the
    giant topological component, the nearest giant-component node is used
    instead (counted in n_resampled_sources).
    """
    bands = [tuple(b) for b in bands]
    studies = []
    for ti, tau in enumerate(taus):
        p = params.replace(tau=float(tau))
        jobs = [(p, region, horizon, rng.child("scaling", ti, s))
                for s in range(n_sources)]
        outs = parallel_map(_scaling_flood, jobs, workers)
        distances = np.concatenate([o[0] for o in outs])
        ratios = np.concatenate([o[1] for o in outs])
        order = np.argsort(distances, kind="stable")
        curve = RatioCurve(distances[order], ratios[order],
                           sum(o[2] for o in outs), sum(o[3] for o in outs))
        fits: list[RateFit | None] = []
        for band in bands:
            try:
                fits.append(fit_scaling_rate(curve, band))
            except ValueError:
                fits.append(None)
        rate_far = None
        ci = None
        for band, fit in zip(reversed(bands), reversed(fits)):
            if fit is not None:
                rate_far = fit.rate
                sel = (curve.distances >= band[0]) & (curve.distances < band[1])
                ci = _median_bootstrap_ci(curve.ratios[sel],
                                          rng.generator("scaling-bootstrap", ti))
                break
        studies.append(TauStudy(float(tau), curve.distances, curve.ratios,
                                fits, rate_far, ci, curve.n_horizon,
                                curve.n_unreachable,
                                sum(1 for o in outs if o[4])))
    return ScalingStudyResult(bands, studies)


# ---------------------------------------------------------------------------
# component-diameter tail (exponential decay in the intermittent regime)

@dataclass
class TailFitResult:
    h_values: np.ndarray
    survival: np.ndarray          # Pr{origin component leaves [-h, h]^2}
    c1: float
    c2: float
    r_squared: float


def _tail_cell(args):
    params, h, trials, seeds = args
    region = BoxRegion.square(h + 2 * params.r_p)
    box = BoxRegion.square(h)
    hits = 0
    for t in range(trials):
        stream = seeds.child("trial", t)
        network = sample_secondary_network(params, region, stream)
        if network.n == 0:
            continue
        topo = build_topo_graph(network, params.r_p)
        realization = sample_primary_slot(params, region, 0, stream)
        comm = build_comm_graph(topo, realization, params)
        d0 = np.hypot(network.points[:, 0], network.points[:, 1])
        origin = int(np.argmin(d0))
        outside = ~box.contains(network.points)
        if np.any(outside & (comm.component_label == comm.component_label[origin])):
            hits += 1
    return hits


def fit_diameter_tail(params: SimulationParams, h_values, trials: int,
                      rng: SeededRng, workers: int = 1) -> TailFitResult:
    """Exponential tail fit of the comm-component reach beyond [-h, h]^2."""
    h_values = np.asarray(sorted(h_values), dtype=float)
    jobs = [(params, float(h), trials, rng.child("tail", i))
            for i, h in enumerate(h_values)]
    hits = np.array(parallel_map(_tail_cell, jobs, workers), dtype=float)
    survival = hits / trials
    if survival[0] == 0:
        raise ValueError("all survival frequencies are zero at the smallest h; "
                         "use smaller h values")
    pos = survival > 0
    h_fit = h_values[pos]
    log_f = np.log(survival[pos])
    slope, intercept = np.polyfit(h_fit, log_f, 1)
    pred = slope * h_fit + intercept
    ss_res = float(np.sum((log_f - pred) ** 2))
    ss_tot = float(np.sum((log_f - log_f.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return TailFitResult(h_values, survival, float(np.exp(intercept)),
                         float(-slope), r2)


# ---------------------------------------------------------------------------
# single-hop delay distribution

@dataclass
class MemorylessCheck:
    offset_a: int
    offset_b: int
    p_conditional: float
    p_tail: float
    z_score: float


@dataclass
class HopDelayTestResult:
    p0: Estimate
    waits: np.ndarray             # slots waited before the first opportunity
    chi2: float
    p_value: float
    dof: int
    memoryless: list[MemorylessCheck]


def _simulate_wait(params: SimulationParams, a, b, local: BoxRegion,
                   stream: SeededRng, max_slots: int = 100000) -> int:
    for s in range(max_slots):
        realization = sample_primary_slot(params, local, s, stream)
        ctx = OpportunityContext(realization, params.r_i, params.R_i)
        if has_bidirectional_opportunity(a, b, ctx):
            return s
    raise RuntimeError("no opportunity found; p0 appears to be ~0")


def single_hop_delay_test(hop_length: float, params: SimulationParams,
                          region: BoxRegion, trials: int, rng: SeededRng,
                          p0_trials: int | None = None) -> HopDelayTestResult:
    """Chi-square test of the waiting time against Geometric(p0).

    p0 comes from estimate_p0 on an independent seed stream; the waiting
    times are fresh simulations of slots until the first bidirectional
    opportunity for a fixed pair.
    """
    if not (0 < hop_length <= params.r_p):
        raise ValueError("hop_length must be in (0, r_p]")
    if p0_trials is None:
        p0_trials = 4 * trials
    p0 = estimate_p0(hop_length, params, region, p0_trials, rng.child("p0-ref"))
    cx, cy = region.center
    a = (cx - hop_length / 2, cy)
    b = (cx + hop_length / 2, cy)
    local = pair_region(region.center, hop_length, params)
    wait_stream = rng.child("waits")
    waits = np.array([_simulate_wait(params, a, b, local, wait_stream.child("t", i))
                      for i in range(trials)], dtype=np.int64)

    p = p0.value
    if p >= 1.0:
        chi2, p_value, dof = 0.0, 1.0, 0
    else:
        # merge the geometric tail so every expected count stays >= 5
        j_max = 0
        while trials * p * (1 - p) ** (j_max + 1) >= 5 and j_max < waits.max():
            j_max += 1
        observed = np.array([np.sum(waits == j) for j in range(j_max + 1)] +
                            [np.sum(waits > j_max)], dtype=float)
        expected = np.array([trials * p * (1 - p) ** j for j in range(j_max + 1)] +
                            [trials * (1 - p) ** (j_max + 1)])
        chi2, p_value = stats.chisquare(observed, expected)
        dof = len(observed) - 1

    checks = []
    for oa, ob in ((1, 1), (1, 2), (2, 1)):
        n_a = int(np.sum(waits >= oa))
        if n_a == 0:
            continue
        p_cond = float(np.sum(waits >= oa + ob) / n_a)
        p_tail = float(np.sum(waits >= ob) / trials)
        se = math.sqrt(max(p_cond * (1 - p_cond) / n_a, 1e-12) +
                       max(p_tail * (1 - p_tail) / trials, 1e-12))
        checks.append(MemorylessCheck(oa, ob, p_cond, p_tail,
                                      abs(p_cond - p_tail) / se))
    return HopDelayTestResult(p0, waits, float(chi2), float(p_value), dof, checks)
