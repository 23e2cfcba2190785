"""Named experiments and their acceptance predicates.

Every experiment consumes an ExperimentConfig, runs deterministically for a
fixed (seed, workers), and returns a ResultRecord whose ``metrics`` are
bit-reproducible; wall-clock timing lives outside the metrics map.  Pass
flags are keyed by acceptance-criterion ids so the aggregate report can
assemble the inequality chain across experiments.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import fuchsian as fg
from . import hyperbolic as hyp
from . import margulis as mg
from . import model as md
from . import nets as nt
from . import regions as rg
from . import walk as wk
from . import witness as wt

EXPERIMENTS = ("lattice-count", "horoball-exponent", "drift", "walk",
               "weak-convexity", "projection-contrast", "witness-count",
               "rafi-check", "volume-bounds", "entropy-compare")

__all__ = ["ExperimentConfig", "ResultRecord", "run", "default_params",
           "config_hash", "EXPERIMENTS"]


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        merged = dict(default_params(self.experiment))
        merged.update(self.params)
        self.params = merged
        for key, val in self.params.items():
            if key.startswith("eps") and not (isinstance(val, list) or val > 0):
                raise ValueError(f"threshold {key} must be positive")
            if key == "radii":
                radii = list(val)
                if any(b <= a for a, b in zip(radii, radii[1:])):
                    raise ValueError("radii must be increasing")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps({"experiment": cfg.experiment, "params": cfg.params,
                       "seed": cfg.seed, "workers": cfg.workers},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ResultRecord:
    experiment: str
    config_hash: str
    timestamp: float
    runtime_s: float
    metrics: dict
    passes: dict
    config: dict

    def to_json(self) -> str:
        return json.dumps({
            "experiment": self.experiment, "config_hash": self.config_hash,
            "timestamp": self.timestamp, "runtime_s": self.runtime_s,
            "metrics": self.metrics, "passes": self.passes, "config": self.config,
        }, sort_keys=True)

    @property
    def all_pass(self) -> bool:
        return all(self.passes.values())


def default_params(experiment: str) -> dict:
    return {
        "lattice-count": {
            "radii": [6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
            "eps_thin": 0.5,          # cusp threshold 1/eps = 2 for concavity
            "concave_spacing": 0.05,
            "slope_range": [0.85, 1.15],
            "runtime_limit_s": 60.0,
            "gap_min": 0.2,
        },
        "horoball-exponent": {
            "radii": [6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0],
            "eps_net": 1.0,
            "level": 1.0,
            "n_stream": 500_000,
            "slope_range": [0.4, 0.6],
            "quad_tol": 1e-8,
            "growth_b": 0.8,
        },
        "drift": {
            "tau": 4.0,
            "tau_grid": [2.0, 3.0, 4.0, 5.0, 6.0],
            "eps_thin": 0.25,
            "n_points": 102,
            "n_samples": 30_000,
            "decay_limit": -0.4,
        },
        "walk": {
            "period": 1.0, "y_min": 0.002, "y_max": 1.0,
            "eps_net": 0.30, "n_stream": 150_000,
            "tau": 5.0, "eps_thin": 20.0, "thick_height": 0.05,
            "n_trajectories": 120_000,
            "extra_steps": 8,
            "tag_mode": "threshold",
            "exponent_limit": -0.5,
            "runtime_limit_s": 300.0,
        },
        "weak-convexity": {
            "n_segments": 1000,
            "eps_systole": 0.2,
            "delta": 1.0,
            "ratio_limit": 1.05,
        },
        "projection-contrast": {
            "n_balls": 100,
            "ball_radius_range": [0.5, 3.0],
            "margin": 0.2,
            "diameter_limit": 5.0,
            "twist_radii": [4.0, 6.0, 8.0],
            "twist_eps": 0.2,
        },
        "witness-count": {
            "budgets": [10, 20, 30, 40, 50, 60, 70, 80],
            "exponents": [1.0, 2.0],
            "max_vertices": 3,
            "n_random_graphs": 1000,
            "eps_r": 0.25,
        },
        "rafi-check": {
            "n_instances": 1000,
            "threshold": 4.0,
        },
        "volume-bounds": {
            "n_centers": 50,
            "radius": 1.0,
            "eps_systole": 0.1,
            "length_band": [0.1, 2.0],
            "n_samples": 40_000,
            "n_coth_samples": 10_000,
            "ratio_limit": 10.0,
        },
        "entropy-compare": {
            "lattice_radii": [6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
            "net_radii": [5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
            "eps_net": 1.2,
            "n_stream": 1_200_000,
            "eps_b": 0.2,
            "bad_radii": [6.0, 8.0, 10.0],
            "slack_lp_np": 0.05,
            "free_product": {
                "cyclic_axis": [-1.0, 1.0], "cyclic_length": 1.6,
                "schottky": [[[-6.0, -4.0], 2.2], [[4.0, 6.0], 2.2]],
                "basepoint": [0.0, 1.2],
                "radius": 14.0,
                "gap_min": 0.1,
                "poincare_h_offset": 0.05,
            },
        },
    }[experiment]


def run(experiment: str, config: ExperimentConfig | dict | None = None) -> ResultRecord:
    if config is None:
        config = ExperimentConfig(experiment)
    elif isinstance(config, dict):
        config = ExperimentConfig(experiment, **config)
    if config.experiment != experiment:
        raise ValueError("config experiment mismatch")
    fn = {
        "lattice-count": _run_lattice_count,
        "horoball-exponent": _run_horoball_exponent,
        "drift": _run_drift,
        "walk": _run_walk,
        "weak-convexity": _run_weak_convexity,
        "projection-contrast": _run_projection_contrast,
        "witness-count": _run_witness_count,
        "rafi-check": _run_rafi_check,
        "volume-bounds": _run_volume_bounds,
        "entropy-compare": _run_entropy_compare,
    }[experiment]
    t0 = time.perf_counter()
    metrics, passes = fn(config)
    runtime = time.perf_counter() - t0
    for key in ("crit1-runtime", "crit5-runtime"):
        if key in passes and passes[key] is None:
            passes[key] = runtime < config.params.get("runtime_limit_s", math.inf)
    return ResultRecord(experiment, config_hash(config), time.time(), runtime,
                        metrics, passes, {"params": config.params,
                                          "seed": config.seed,
                                          "workers": config.workers})


# ---------------------------------------------------------------------------


def _run_lattice_count(cfg):
    p = cfg.params
    radii = [float(r) for r in p["radii"]]
    group = fg.GroupPresentation.psl2z()
    base = (0.0, 1.0)
    enum = fg.enumerate_orbit(group, base, radii[-1])
    counts = enum.counts(radii)
    slope, ci = fg.fit_exponent(radii, counts)
    conc = fg.count_concave_lattice_points(
        group, base, radii[-1], p["eps_thin"], radii=radii,
        spacing=p["concave_spacing"], enum=enum)
    lo, hi = p["slope_range"]
    metrics = {
        "radii": radii,
        "counts": [int(c) for c in counts],
        "lattice_exponent": slope,
        "lattice_exponent_ci": list(ci),
        "concave_counts": [int(c) for c in conc.concave_counts],
        "concave_exponent": conc.exponent,
        "concave_s": conc.s,
        "exponent_gap": (slope - conc.exponent) if conc.exponent is not None else None,
    }
    passes = {
        "crit1-slope": lo <= slope <= hi,
        "crit1-runtime": None,  # filled from measured runtime
        "crit3-gap": conc.exponent is not None and slope - conc.exponent >= p["gap_min"],
    }
    return metrics, passes


def _run_horoball_exponent(cfg):
    p = cfg.params
    radii = [float(r) for r in p["radii"]]
    region = rg.HoroballCap((0.0, 1.0), radii[-1] + 0.5, level=p["level"])
    net = nt.build_net(region, p["eps_net"], seed=cfg.seed, n_stream=p["n_stream"])
    counts = [net.count_in_ball((0.0, 1.0), r) for r in radii]
    est = nt.fit_entropy(radii, counts, source="horoball-net")
    b = p["growth_b"]
    closed = [hyp.horoball_ball_volume(R, b) for R in (5.0, 10.0, 20.0)]
    quad = [hyp.rectangle_volume_quadrature(math.exp(b * R / 2.0), math.exp(b * R))
            for R in (5.0, 10.0, 20.0)]
    max_err = max(abs(c - q) / max(abs(c), 1.0) for c, q in zip(closed, quad))
    growth_radii = np.arange(5.0, 20.5, 1.0)
    vols = [hyp.horoball_ball_volume(R, b) for R in growth_radii]
    growth_slope = float(np.polyfit(growth_radii, np.log(vols), 1)[0])
    lo, hi = p["slope_range"]
    metrics = {
        "radii": radii, "counts": [int(c) for c in counts],
        "net_exponent": est.slope, "net_size": len(net),
        "covering_radius": net.covering_radius,
        "rect_rel_err": max_err,
        "rect_growth_slope": growth_slope, "rect_growth_target": b / 2.0,
    }
    passes = {
        "crit2-exponent": lo <= est.slope <= hi,
        "crit2-quadrature": max_err <= p["quad_tol"],
    }
    return metrics, passes


def _drift_test_points(space, rng, eps, tau, n_points):
    pts = []
    kinds = []
    deep_lo, deep_hi = tau + 1.2, tau + 4.0
    n1 = n_points - 2 * (n_points // 3)
    n2 = n_points // 3
    for _ in range(n1):
        pts.append(space.point(
            (rng.uniform(-1, 1), math.exp(deep_lo + rng.uniform(0, deep_hi - deep_lo)) / eps),
            (rng.uniform(-1, 1), math.exp(rng.uniform(-1, 1))),
            math.exp(rng.uniform(-1, 1))))
        kinds.append("R1")
    for _ in range(n2):
        pts.append(space.point(
            (rng.uniform(-1, 1), math.exp(deep_lo + rng.uniform(0, deep_hi - deep_lo)) / eps),
            (rng.uniform(-1, 1), math.exp(deep_lo + rng.uniform(0, deep_hi - deep_lo)) / eps),
            math.exp(rng.uniform(-1, 1))))
        kinds.append("R2")
    for _ in range(n2):
        pts.append(space.point(
            (rng.uniform(-1, 1), math.exp(rng.uniform(-1, 1))),
            (rng.uniform(-1, 1), math.exp(rng.uniform(-1, 1))),
            math.exp(rng.uniform(-1, 1))))
        kinds.append("R3")
    return pts, kinds


def _run_drift(cfg):
    p = cfg.params
    eps, tau = p["eps_thin"], p["tau"]
    space = md.ModelSpace((md.PlaneFactor(), md.PlaneFactor(), md.LineFactor()),
                          eps_systole=0.1)
    measure = md.NorburyModelMeasure(space)
    f = mg.MargulisFn(space)
    rng = np.random.default_rng(cfg.seed)
    points, _ = _drift_test_points(space, rng, eps, tau, p["n_points"])
    # calibrate the bounded term on thick probes, then freeze
    probes = [space.point((rng.uniform(-1, 1), math.exp(rng.uniform(-1, 1))),
                          (rng.uniform(-1, 1), math.exp(rng.uniform(-1, 1))),
                          math.exp(rng.uniform(-1, 1))) for _ in range(12)]
    cal = max(mg.ball_average(f, measure, x, tau, p["n_samples"] // 2,
                              seed=cfg.seed + 7_000 + i, workers=cfg.workers).value
              for i, x in enumerate(probes))
    bound_b = 1.5 * cal
    report = mg.verify_drift(f, measure, points, tau, eps, bound_b,
                             n_samples=p["n_samples"], seed=cfg.seed)
    # decay of the measured averaging ratio at a deep single-thin point
    deep = space.point((0.0, math.exp(max(p["tau_grid"]) + 4.0) / eps),
                       (0.0, 1.0), 1.0)
    ratios = []
    for i, t in enumerate(p["tau_grid"]):
        ba = mg.ball_average(f, measure, deep, t, p["n_samples"],
                             seed=cfg.seed + 100 + i, workers=cfg.workers)
        ratios.append(ba.value / f(deep))
    measured = mg.fit_decay(p["tau_grid"], ratios)
    quad = mg.fit_decay(p["tau_grid"],
                        [mg.ball_average_ratio_quadrature(t) for t in p["tau_grid"]])
    metrics = {
        "tau": tau, "bound_b": bound_b,
        "regions": report.regions_present(),
        "n_points": len(report.rows),
        "n_counterexamples": len(report.counterexamples),
        "ratios": ratios, "tau_grid": list(p["tau_grid"]),
        "decay_exponent_measured": measured,
        "decay_exponent_quadrature": quad,
    }
    passes = {
        "crit4-inequality": len(report.counterexamples) == 0
        and report.regions_present() == ["R1", "R2", "R3"]
        and len(report.rows) >= 100,
        "crit4-decay": measured <= p["decay_limit"],
    }
    return metrics, passes


def _run_walk(cfg):
    p = cfg.params
    strip = rg.PeriodicStrip(p["period"], p["y_min"], p["y_max"])
    net = nt.build_net(strip, p["eps_net"], seed=cfg.seed, n_stream=p["n_stream"])
    from ._kernels import max_pairwise_dist
    thick_pts = np.ascontiguousarray(net.points[net.points[:, 1] <= p["thick_height"]])
    diam = max_pairwise_dist(thick_pts, 1, p["period"])
    table = wk.NeighborTable(net, p["tau"])
    start = int(np.argmin(np.abs(net.points[:, 1] - 0.8 * p["thick_height"])))
    s = math.ceil(diam / p["tau"]) + 1
    wcfg = wk.WalkConfig(tau=p["tau"], n_steps=2 * s + p["extra_steps"],
                         eps_thin=p["eps_thin"], diam_thick=diam, seed=cfg.seed,
                         n_trajectories=p["n_trajectories"], tag_mode=p["tag_mode"])
    res = wk.run_and_count_concave(net, start, wcfg, table=table)
    metrics = {
        "net_size": len(net), "thick_diameter": diam, "s_steps": res.s_steps,
        "n_values": res.n_values.tolist(),
        "concave_counts": res.concave_counts.tolist(),
        "fractions": res.fractions.tolist(),
        "per_step_exponent": res.per_step_exponent,
        "n_trajectories": res.n_trajectories,
        "low_counts": res.low_counts,
    }
    passes = {
        "crit5-decay": (res.per_step_exponent is not None
                        and res.per_step_exponent <= p["exponent_limit"]
                        and not res.low_counts
                        and res.n_trajectories >= 100_000),
        "crit5-runtime": None,
    }
    return metrics, passes


def spiked_sup_geodesic(space, rng, eps_prime):
    """Random sup-metric geodesic with systole-set endpoints that may dip
    below the systole threshold in its line coordinates.

    Endpoint factor coordinates are drawn in the systole set; when the sup
    distance D is dominated by another factor, a middle point may spike any
    line coordinate up to exp(D/2) beyond its endpoints without breaking
    geodesy, which reproduces the convexity failure the homotopy repairs.
    """
    cap = 1.0 / eps_prime
    plane = [(rng.uniform(-2, 2), math.exp(rng.uniform(-1.5, 1.5)))
             for _ in space.plane_indices]
    us_a = [math.exp(rng.uniform(-1.5, math.log(cap))) for _ in space.line_indices]
    us_b = [math.exp(rng.uniform(-1.5, math.log(cap))) for _ in space.line_indices]
    a = space.point(*_assemble(space, plane, us_a))
    plane_b = [(x + rng.uniform(-3, 3), y * math.exp(rng.uniform(-1.5, 1.5)))
               for (x, y) in plane]
    b = space.point(*_assemble(space, plane_b, us_b))
    D = md.model_distance(a, b)
    if D <= 0.2:
        return md.ModelPath([a, b]), False
    mid = md.ModelPath([a, b]).eval(0.5)
    coords = list(mid.coords)
    dipped = False
    for j, i in enumerate(space.line_indices):
        room_a = D / 2.0 - abs(math.log(coords[i] / us_a[j]))
        room_b = D / 2.0 - abs(math.log(coords[i] / us_b[j]))
        room = min(room_a, room_b)
        if room > 0.05 and rng.random() < 0.7:
            spike = coords[i] * math.exp(rng.uniform(0.5, 1.0) * room)
            coords[i] = spike
            if spike > cap:
                dipped = True
    mid2 = md.ModelPoint(space, tuple(coords))
    path = md.ModelPath([a, mid2, b])
    if abs(path.length - D) > 1e-9:
        return md.ModelPath([a, b]), False
    return path, dipped


def _assemble(space, plane_coords, line_coords):
    coords = [None] * len(space.factors)  # base factors stay None (a point)
    for (i, c) in zip(space.plane_indices, plane_coords):
        coords[i] = c
    for (i, u) in zip(space.line_indices, line_coords):
        coords[i] = u
    return coords


def _run_weak_convexity(cfg):
    p = cfg.params
    eps = p["eps_systole"]
    rng = np.random.default_rng(cfg.seed)
    mixed_space = md.ModelSpace((md.PlaneFactor(), md.LineFactor(), md.LineFactor()),
                                eps_systole=eps)
    line_space = md.ModelSpace((md.LineFactor(), md.LineFactor()),
                               eps_systole=eps)
    worst = 0.0
    n_dipped = 0
    in_set_failures = 0
    half = p["n_segments"] // 2
    line_ratios = []
    for k in range(p["n_segments"]):
        space = mixed_space if k < half else line_space
        path, dipped = spiked_sup_geodesic(space, rng, eps)
        out, ratio = md.weak_convexity_homotope(path, p["delta"], eps)
        n_dipped += dipped
        worst = max(worst, ratio)
        if space is line_space:
            line_ratios.append(ratio)
        for t in np.linspace(0.0, 1.0, 21):
            if not md.is_in_systole_set(out.eval(t), eps):
                in_set_failures += 1
                break
    metrics = {
        "n_segments": p["n_segments"], "n_dipped": int(n_dipped),
        "worst_ratio": worst, "in_set_failures": in_set_failures,
        "worst_line_ratio": max(line_ratios) if line_ratios else None,
    }
    passes = {
        "crit6-ratio": worst <= p["ratio_limit"] and in_set_failures == 0,
        "crit6-line-exact": max(line_ratios) <= 1.0 + 1e-12,
    }
    return metrics, passes


def _run_projection_contrast(cfg):
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    axis = hyp.FullGeodesic((0.0, 1.0), (0.0, math.e))
    lo, hi = p["ball_radius_range"]
    diams = []
    oracle_gap = 0.0
    for _ in range(p["n_balls"]):
        R = rng.uniform(lo, hi)
        dist = R + p["margin"] + rng.uniform(0.0, 2.0)
        side = 1.0 if rng.random() < 0.5 else -1.0
        yc = math.exp(rng.uniform(-1.0, 3.0))
        xc = side * yc * math.sinh(dist)  # d((x,y), axis) = arcsinh(|x|/y)
        boundary = _ball_boundary((xc, yc), R, 400)
        diam = hyp.set_projection_diameter(boundary, axis)
        dense = hyp.set_projection_diameter(_ball_boundary((xc, yc), R, 4000), axis)
        oracle_gap = max(oracle_gap, abs(diam - dense))
        diams.append(dense)
    twist = {}
    ok_disjoint = True
    for R in p["twist_radii"]:
        d, dist0 = md.twist_orbit_projection_diameter(R, p["twist_eps"])
        twist[str(R)] = d
        ok_disjoint &= dist0 >= R - 1e-9
    r_lo, r_hi = (str(p["twist_radii"][0]), str(p["twist_radii"][-1]))
    metrics = {
        "max_axis_projection_diameter": max(diams),
        "axis_oracle_gap": oracle_gap,
        "twist_diameters": twist,
        "twist_disjoint": ok_disjoint,
    }
    passes = {
        "crit7-axis": max(diams) <= p["diameter_limit"],
        "crit7-twist-growth": all(twist[str(R)] >= 1.5 * R for R in p["twist_radii"])
        and twist[r_hi] > twist[r_lo] + 2.0 and ok_disjoint,
    }
    return metrics, passes


def _ball_boundary(center, R, n):
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    rho = math.tanh(R / 2.0)
    w = rho * np.exp(1j * theta)
    z = 1j * (1.0 + w) / (1.0 - w)
    xc, yc = center
    return [(float(zz.real * yc + xc), float(zz.imag * yc)) for zz in z]


def _run_witness_count(cfg):
    from fractions import Fraction
    p = cfg.params
    budgets = [float(b) for b in p["budgets"]]
    counts = [wt.count_combinatorial_types(p["max_vertices"], b, p["exponents"])
              for b in budgets]
    slope = float(np.polyfit(np.log(budgets), np.log(counts), 1)[0])
    bound = p["max_vertices"] * len(p["exponents"])
    # exact-arithmetic sweep of the per-type count bound
    rng = np.random.default_rng(cfg.seed)
    eps_r = Fraction(p["eps_r"]).limit_denominator(1000)
    violations = 0
    h_choices = [Fraction(1), Fraction(2), Fraction(5, 2)]
    for _ in range(p["n_random_graphs"]):
        n = int(rng.integers(1, 6))
        labels = []
        for _ in range(n):
            labels.append((h_choices[rng.integers(len(h_choices))],
                           int(rng.integers(0, 12))))
        budget = sum(h * s for h, s in labels)
        g = wt.WitnessGraph(labels=labels, edges={})
        eps_ent = eps_r * min(h for h, _ in labels)
        lhs = wt.count_bound_log(g, eps_ent)
        rhs = (1 + eps_r) * budget
        if lhs > rhs:
            violations += 1
    # linear-gap sweep: synthetic bad-geodesic segment lists whose tail of
    # relative length eps_b runs at exponent h_sub = h - 1
    eps_b = 0.2
    worst_gap_err = 0.0
    gap_rows = 0
    for _ in range(p["n_random_graphs"]):
        h = float(rng.uniform(1.5, 4.0))
        h_sub = h - 1.0
        R = float(rng.uniform(5.0, 50.0))
        head_len = (1.0 - eps_b) * R
        cuts = np.sort(rng.uniform(0, head_len, int(rng.integers(0, 4))))
        pieces = np.diff(np.concatenate([[0.0], cuts, [head_len]]))
        segs = [(float(l), h) for l in pieces if l > 0]
        tail_cuts = np.sort(rng.uniform(0, eps_b * R, int(rng.integers(0, 3))))
        tail = np.diff(np.concatenate([[0.0], tail_cuts, [eps_b * R]]))
        segs += [(float(l), h_sub) for l in tail if l > 0]
        verdict, achieved = wt.linear_gap_check(
            wt.ComplexitySegments(segs), h, eps_b, h_sub)
        expected = eps_b * (1.0 - h_sub / h)
        if verdict == "not-applicable":
            continue
        gap_rows += 1
        worst_gap_err = max(worst_gap_err, abs(achieved - expected))
    metrics = {
        "budgets": budgets, "type_counts": counts, "loglog_slope": slope,
        "slope_bound": bound, "count_bound_violations": violations,
        "n_random_graphs": p["n_random_graphs"],
        "linear_gap_rows": gap_rows, "linear_gap_worst_err": worst_gap_err,
    }
    passes = {
        "crit8-poly": slope <= bound,
        "crit8-bound": violations == 0,
        "crit9-exact": gap_rows >= p["n_random_graphs"] * 9 // 10
        and worst_gap_err <= 1e-9,
    }
    return metrics, passes


def _run_rafi_check(cfg):
    """Synthetic product-region instances with one simultaneously-short class
    active (the formula takes separate maxima over two-sided and one-sided
    short curves, so the sup-metric identification is exact exactly when a
    single class carries the distance)."""
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    space = md.ModelSpace((md.PlaneFactor(), md.PlaneFactor(), md.LineFactor()),
                          eps_systole=0.1)
    k = p["threshold"]
    max_gap = 0.0
    monotone_ok = True
    for trial in range(p["n_instances"]):
        plane_a = [(rng.uniform(-3, 3), math.exp(rng.uniform(-1, 2))) for _ in range(2)]
        line_a = math.exp(rng.uniform(-2, 2))
        if trial % 2 == 0:  # two-sided class active, one-sided distance zero
            plane_b = [(rng.uniform(-3, 3), math.exp(rng.uniform(-1, 2))) for _ in range(2)]
            line_b = line_a
        else:               # one-sided class active, plane distances zero
            plane_b = plane_a
            line_b = math.exp(rng.uniform(-2, 2))
        a = space.point(plane_a[0], plane_a[1], line_a)
        b = space.point(plane_b[0], plane_b[1], line_b)
        plane_d = [hyp.distance(a.coords[i], b.coords[i]) for i in space.plane_indices]
        line_d = [abs(math.log(a.coords[i] / b.coords[i])) for i in space.line_indices]
        inp = wt.RafiInput(
            nonannular=[rng.uniform(0, k)],                 # killed by the cutoff
            annular_twists=[rng.uniform(0, math.exp(k))],   # log lands under k
            short_two_sided=plane_d, short_one_sided=line_d, threshold=k)
        val = wt.rafi_distance(inp)
        ref = md.model_distance(a, b)
        max_gap = max(max_gap, abs(val - ref))
        # monotonicity spot check: pushing a term above the cutoff only grows
        inp_up = wt.RafiInput(nonannular=[k + 1.0], annular_twists=[],
                              short_two_sided=plane_d, short_one_sided=line_d,
                              threshold=k)
        if wt.rafi_distance(inp_up) < val - 1e-12:
            monotone_ok = False
    metrics = {"n_instances": p["n_instances"], "max_gap": max_gap,
               "monotone_ok": monotone_ok}
    passes = {"crit12-exact": max_gap == 0.0, "crit12-monotone": monotone_ok}
    return metrics, passes


def _run_volume_bounds(cfg):
    p = cfg.params
    eps_t = p["eps_systole"]
    space = md.ModelSpace((md.PlaneFactor(), md.PlaneFactor(), md.LineFactor(),
                           md.LineFactor()), eps_systole=eps_t)
    measure = md.NorburyModelMeasure(space)
    rng = np.random.default_rng(cfg.seed)
    l_lo, l_hi = p["length_band"]
    vols = []
    for i in range(p["n_centers"]):
        center = space.point(
            (rng.uniform(-2, 2), math.exp(rng.uniform(-1.5, 1.5))),
            (rng.uniform(-2, 2), math.exp(rng.uniform(-1.5, 1.5))),
            1.0 / rng.uniform(l_lo, l_hi),
            1.0 / rng.uniform(l_lo, l_hi))
        est = md.mc_ball_volume(measure, center, p["radius"], p["n_samples"],
                                seed=cfg.seed + i, workers=cfg.workers)
        vols.append(est.value)
    ratio = max(vols) / min(vols)
    # coth sandwich on systole-set samples
    lo_w, hi_w = measure.coth_weight_bounds()
    lengths = rng.uniform(eps_t, 5.0, p["n_coth_samples"])
    weights = 1.0 / np.tanh(lengths)
    sandwich_ok = bool(np.all((weights >= lo_w - 1e-12) & (weights <= hi_w + 1e-12)))
    # closed-form cross-checks at one center
    c0 = space.point((0.0, 1.0), (0.0, 1.0), 1.0 / l_hi, 1.0 / l_hi)
    est0 = md.mc_ball_volume(measure, c0, p["radius"], p["n_samples"],
                             seed=cfg.seed + 999, workers=cfg.workers)
    exact0 = (md.plane_ball_volume_exact(p["radius"]) ** 2
              * md.line_ball_volume_exact(1.0 / l_hi, p["radius"]) ** 2)
    z_score = abs(est0.value - exact0) / est0.std_error
    metrics = {
        "volumes": vols, "max_min_ratio": ratio,
        "coth_bounds": [lo_w, hi_w], "coth_sandwich_ok": sandwich_ok,
        "closed_form_z": z_score,
    }
    passes = {
        "crit11-ratio": ratio <= p["ratio_limit"],
        "crit11-coth": sandwich_ok,
        "crit11-closed-form": z_score <= 3.0,
    }
    return metrics, passes


def _run_entropy_compare(cfg):
    p = cfg.params
    lattice_radii = [float(r) for r in p["lattice_radii"]]
    net_radii = [float(r) for r in p["net_radii"]]
    group = fg.GroupPresentation.psl2z()
    base = (0.0, 1.0)
    enum = fg.enumerate_orbit(group, base, lattice_radii[-1])
    lp_slope, lp_ci = fg.fit_exponent(lattice_radii, enum.counts(lattice_radii))
    region = rg.PlaneBall(base, net_radii[-1] + 0.5)
    net = nt.build_net(region, p["eps_net"], seed=cfg.seed, n_stream=p["n_stream"])
    counts = [net.count_in_ball(base, r) for r in net_radii]
    np_est = nt.fit_entropy(net_radii, counts, source="plane-net")
    # bad-point fractions against the lattice orbit
    fractions = []
    for R in p["bad_radii"]:
        cls = nt.classify_good_bad(net, enum, base, R, p["eps_b"], want_words=False)
        fractions.append(cls.bad_fraction)
    decreasing = all(b < a for a, b in zip(fractions, fractions[1:]))
    # free-product entropy gap + series lower bound
    fp = p["free_product"]
    A = fg.GroupPresentation.cyclic_hyperbolic(fp["cyclic_length"],
                                               axis=tuple(fp["cyclic_axis"]))
    S = fg.GroupPresentation.schottky([(tuple(ax), ln) for ax, ln in fp["schottky"]])
    H = fg.free_product(A, S)
    q = tuple(fp["basepoint"])
    R_H = fp["radius"]
    fit_radii = np.arange(R_H - 7.0, R_H + 0.1, 1.0)
    eA = fg.enumerate_orbit(A, q, 90.0)
    slA, _ = fg.fit_exponent(np.arange(30.0, 91.0, 10.0), eA.counts(np.arange(30.0, 91.0, 10.0)))
    eS = fg.enumerate_orbit(S, q, R_H)
    slS, _ = fg.fit_exponent(fit_radii, eS.counts(fit_radii))
    eH = fg.enumerate_orbit(H, q, R_H)
    slH, _ = fg.fit_exponent(fit_radii, eH.counts(fit_radii))
    gap = slH - max(slA, slS)
    h_test = max(slA, slS) + fp["poincare_h_offset"]
    series_ok, series_detail = _poincare_lower_bound_check(eA, eS, eH, q, h_test)
    metrics = {
        "lattice_exponent": lp_slope, "net_exponent": np_est.slope,
        "net_size": len(net),
        "bad_radii": list(p["bad_radii"]), "bad_fractions": fractions,
        "factor_exponents": [slA, slS], "free_product_exponent": slH,
        "free_product_gap": gap,
        "poincare_h": h_test, "poincare_detail": series_detail,
    }
    passes = {
        "crit-lp-le-np": lp_slope <= np_est.slope + p["slack_lp_np"],
        "crit-bad-decreasing": decreasing,
        "crit10-gap": gap >= fp["gap_min"],
        "crit10-series": series_ok,
    }
    return metrics, passes


def _poincare_lower_bound_check(eA, eS, eH, q, h):
    """Free-product partial sums dominate the alternating-word geometric
    bound at every enumerated radius.

    Words a_1 b_1 ... a_k b_k with nontrivial syllables and per-syllable
    displacement budgets r_a + r_b <= R/k are distinct elements of
    displacement <= R (triangle inequality), each contributing at least the
    product of its syllable weights, so the partial sum at R dominates
    sum_k (S_A(r_a) S_B(r_b))^k.
    """
    rows = []
    ok = True
    dA = np.sort(eA.dists)[1:]  # drop identity
    dS = np.sort(eS.dists)[1:]
    dH = np.sort(eH.dists)
    wH = np.exp(-h * dH)
    cumH = np.cumsum(wH)
    for R in np.arange(4.0, eH.radius + 0.1, 1.0):
        lhs = float(cumH[np.searchsorted(dH, R, side="right") - 1])
        best = 0.0
        for r_a_frac in (0.3, 0.5, 0.7):
            bound = 0.0
            k = 1
            while True:
                r_a = R / k * r_a_frac
                r_b = R / k - r_a
                sA = float(np.sum(np.exp(-h * dA[dA <= r_a])))
                sB = float(np.sum(np.exp(-h * dS[dS <= r_b])))
                term = (sA * sB) ** k
                if term <= 0:
                    break
                bound += term
                k += 1
                if k > 40:
                    break
            best = max(best, bound)
        rows.append({"R": float(R), "partial_sum": lhs, "lower_bound": best})
        if lhs + 1e-9 < best:
            ok = False
    return ok, rows
