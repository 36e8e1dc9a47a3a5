"""Scenario runners shared by the command line and the acceptance suite.

Each runner takes a plain configuration dict (defaults filled from
``DEFAULTS``) and returns ``(Report, artifacts)``, where ``artifacts`` maps
file names to text. Reports depend only on the configuration and its seeds.
"""
from __future__ import annotations

import math
import time
from math import comb

import numpy as np

from . import __version__, foam
from .errors import FalsificationError, PreconditionError, SearchExhausted, SeparationFailure
from .geom.mesh import TriMesh, is_closed, mesh_area, triangle_areas, unit_normals
from .hyperwidth import cubes, homology, threeplane
from .io import certificate_to_text, curve_to_text, mesh_to_text, read_mesh
from .kinsep import avoid, kinematic, nerve, pipeline, tower
from .kinsep.pose import random_poses
from .meshgen import generate_mesh, icosphere, perturbed_sphere, torus
from .report import Report
from .sgnperm import (Subspace, avg_abs_dot, avg_projection_jacobian, avg_projection_length,
                      avg_sq_dot, avg_sq_projection_jacobian, avg_sq_projection_length,
                      random_unit_vector, sample_group)

EXACT = 1e-9
BOUND_SLACK = 1e-12
SIGMAS = 4.0

DEFAULTS = {
    "lemmas": {"n": [1, 2, 3, 4, 5], "trials": 100, "seed": 1},
    "foam-sweep": {"n": [1, 2, 3, 4], "samples": 200_000, "seed": 3, "points": 64, "band": 0.02},
    "foam-union": {"n": 2, "resolution": 256, "seeds": 200, "seed": 0, "lam": None,
                   "sweep_samples": 200_000, "max_steps": None, "calibration_samples": 200_000,
                   "slack": 0.15},
    "kinematic": {"pairs": 100, "shift_samples": 40_000, "seed": 5},
    "avoid": {"meshes": 50, "seed": 6, "mesh": None, "max_draws": 10_000},
    "tower": {"seed": 7, "lam": None, "resolution": 64, "m": 2, "pose_samples": 32, "mc_res": 16,
              "queries": 10_000, "query_box": 2.0, "cells": 5, "sweep_samples": 200_000},
    "width-highcodim": {"seeds": 20, "seed": 8, "hypothesis": 0.95, "budget": 256, "samples": 2000,
                        "mesh": None, "scale": None, "subdivisions": 3, "tower_seed": 1, "lam": None,
                        "resolution": 64, "pose_samples": 16, "mc_res": 16, "mass_samples": 256,
                        "sweep_samples": 200_000},
    "width-codim1": {"meshes": 100, "seed": 9, "mesh": None, "scale": None, "voxel_res": 64,
                     "sweep_res": 256, "samples": 10_000, "eps": threeplane.DEFAULT_EPS},
    "essential-curve": {"seed": 10, "mesh": None, "scale": None, "side": None, "eps": 1e-3,
                        "major": 2.0, "minor": 0.5, "nu": 32, "nv": 16, "max_cubes": None},
    "gen-mesh": {"kind": "icosphere", "seed": 0, "radius": 1.0, "subdivisions": 4, "major": 2.0,
                 "minor": 0.5, "nu": 64, "nv": 32, "amplitude": 0.1, "modes": 6, "center": [0.0, 0.0, 0.0],
                 "scale": None},
}

COMMANDS = tuple(DEFAULTS)


def config_for(command: str, overrides: dict | None = None) -> dict:
    if command not in DEFAULTS:
        raise PreconditionError(f"unknown subcommand {command!r}")
    cfg = dict(DEFAULTS[command])
    for k, v in (overrides or {}).items():
        if k not in cfg:
            raise PreconditionError(f"{command}: unknown option {k!r}")
        cfg[k] = v
    return cfg


def run(command: str, overrides: dict | None = None):
    cfg = config_for(command, overrides)
    rep = Report(command, cfg, provenance={"version": __version__})
    t0 = time.perf_counter()
    artifacts = RUNNERS[command](cfg, rep) or {}
    rep.timing["total_seconds"] = time.perf_counter() - t0
    return rep, artifacts


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _load_mesh(cfg) -> TriMesh | None:
    if not cfg.get("mesh"):
        return None
    m = read_mesh(cfg["mesh"])
    return m.scaled(cfg["scale"]) if cfg.get("scale") else m


def _scaled_to_area(m: TriMesh, area: float) -> TriMesh:
    return m.scaled(math.sqrt(area / mesh_area(m)))


def _lambda(n: int, cfg) -> float:
    if cfg.get("lam") is not None:
        return float(cfg["lam"])
    return foam.sweep_minimizer(n, samples=cfg["sweep_samples"], seed=cfg["seed"])


# -- group identities and bounds ------------------------------------------------


def run_lemmas(cfg, rep: Report):
    for n in _as_list(cfg["n"]):
        dev = {"sq_dot": 0.0, "sq_projection": 0.0, "sq_jacobian": 0.0}
        excess = {"abs_dot": -math.inf, "projection": -math.inf, "jacobian": -math.inf}
        for k in range(cfg["trials"]):
            rng = np.random.default_rng([cfg["seed"], n, k])
            m = 1 + k % n
            a, b = random_unit_vector(n, rng), random_unit_vector(n, rng)
            L, L2 = Subspace.random(n, m, rng), Subspace.random(n, m, rng)
            dev["sq_dot"] = max(dev["sq_dot"], abs(avg_sq_dot(a, b) - 1 / n))
            dev["sq_projection"] = max(dev["sq_projection"], abs(avg_sq_projection_length(b, L) - m / n))
            dev["sq_jacobian"] = max(dev["sq_jacobian"], abs(avg_sq_projection_jacobian(L, L2) - 1 / comb(n, m)))
            excess["abs_dot"] = max(excess["abs_dot"], avg_abs_dot(a, b) - 1 / math.sqrt(n))
            excess["projection"] = max(excess["projection"], avg_projection_length(b, L) - math.sqrt(m / n))
            excess["jacobian"] = max(excess["jacobian"],
                                     avg_projection_jacobian(L, L2) - 1 / math.sqrt(comb(n, m)))
        tags = {"n": n, "trials": cfg["trials"]}
        for name, v in dev.items():
            rep.add("identity", f"max_dev_{name}", v, EXACT, "<", tags=tags)
        for name, v in excess.items():
            rep.add("bound", f"max_excess_{name}", v, 0.0, "<=", tol=BOUND_SLACK, tags=tags)


# -- foam -------------------------------------------------------------------------


def run_foam_sweep(cfg, rep: Report):
    grid = foam.default_lambda_grid(cfg["points"])
    for n in _as_list(cfg["n"]):
        curve = foam.ratio_sweep(n, grid, cfg["samples"], cfg["seed"], cfg["band"])
        for p in curve.points:
            rep.add("foam-curve", "ratio", p.ratio, se=p.ratio_se, report_only=True,
                    tags={"n": n, "lam": p.lam, "area": p.area.value, "area_se": p.area.se,
                          "volume": p.volume.value, "alt_ratio": p.alt_ratio, "degenerate": p.degenerate})
        best = curve.minimum()
        if best is None:
            rep.add("foam-ratio", "min_ratio", math.nan, curve.bound, tags={"n": n})
            continue
        rep.add("foam-ratio", "min_ratio", best.ratio, curve.bound, "<=", se=best.ratio_se, sigmas=SIGMAS,
                tags={"n": n, "lam": best.lam, "volume": best.volume.value})
        for label, p in (("min_ratio_unrestricted", curve.minimum_unrestricted()),
                         ("min_alt_ratio", curve.minimum_alt())):
            if p is not None:
                v = p.ratio if label.endswith("unrestricted") else p.alt_ratio
                rep.add("foam-ratio", label, v, curve.bound, report_only=True, tags={"n": n, "lam": p.lam})
        if n == 2:
            rep.add("foam-ratio", "reference_bound", curve.bound, 8.8858, "abs<", tol=5e-5, tags={"n": n})


def run_foam_union(cfg, rep: Report):
    n, R = cfg["n"], cfg["resolution"]
    lam = _lambda(n, cfg)
    corr = foam.facet_correction(n, lam, R, cfg["calibration_samples"], cfg["seed"])
    bound = 2 * math.pi * math.sqrt(n)
    rep.add("foam-union-setup", "lambda", lam, report_only=True, tags={"n": n})
    rep.add("foam-union-setup", "facet_correction", corr["correction"], report_only=True,
            tags={"mc_area": corr["mc_area"], "mc_se": corr["mc_se"], "raster_area": corr["raster_area"]})
    measures, separated = [], 0
    for k in range(cfg["seeds"]):
        s = cfg["seed"] + k
        tags = {"n": n, "seed": s}
        try:
            st = foam.union_process(n, lam, R, cfg["max_steps"], s, corr["correction"])
        except SeparationFailure as e:
            rep.add("foam-union-run", "separated", False, True, "==", tags=tags)
            st = e.state
            if st is None:
                continue
        else:
            separated += 1
            rep.add("foam-union-run", "separated", True, True, "==", tags=tags)
        comps = st.components
        rep.add("foam-union-run", "max_extent", float(comps.max_extent.max()) if comps.count else 0.0,
                float(R), "<", tags=tags)
        rep.add("foam-union-run", "winding", bool(comps.winding.any()), False, "==", tags=tags)
        rep.add("foam-union-run", "steps", st.steps, report_only=True, tags=tags)
        rep.add("foam-union-run", "boundary_measure", st.boundary_measure, report_only=True,
                tags=dict(tags, raw=st.raw_measure))
        measures.append(st.boundary_measure)
    total = cfg["seeds"]
    rep.add("foam-union", "separated_fraction", separated / total if total else 1.0, 1.0, "==",
            tags={"n": n, "runs": total})
    if measures:
        mean = float(np.mean(measures))
        se = float(np.std(measures, ddof=1) / math.sqrt(len(measures))) if len(measures) > 1 else 0.0
        rep.add("foam-union", "mean_boundary_measure", mean, bound * (1 + cfg["slack"]), "<=",
                report_only=n != 2, tags={"n": n, "se": se, "foam_bound": bound, "slack": cfg["slack"]})


# -- kinematic oracles ------------------------------------------------------------------


def run_kinematic(cfg, rep: Report):
    sqrt23 = math.sqrt(2 / 3)
    for k in range(cfg["pairs"]):
        rng = np.random.default_rng([cfg["seed"], k])
        a, b = rng.normal(size=(2, 3, 3))
        s = sample_group(3, 1, rng.integers(2**63))[0]
        bs = s.apply(b)
        tags = {"pair": k}
        v, se, deg = kinematic.mc_pair_surface(a, bs, cfg["shift_samples"], rng)
        rep.add("kinematic-surface", "shift_integral", v, kinematic.hypersurface_oracle(a, bs), "abs<",
                se=se, sigmas=SIGMAS, tags=dict(tags, degenerate=deg))
        aa, ab = float(triangle_areas(a[None])[0]), float(triangle_areas(b[None])[0])
        na, nb = unit_normals(a[None])[0], unit_normals(b[None])[0]
        rep.add("kinematic-surface", "group_average", kinematic.exact_normal_average(na, nb) * aa * ab,
                sqrt23 * aa * ab, "<=", tol=EXACT, tags=tags)

        t, seg = rng.normal(size=(3, 3)), rng.normal(size=(2, 3))
        s = sample_group(3, 1, rng.integers(2**63))[0]
        seg_s = s.apply(seg)
        v, se, deg = kinematic.mc_pair_count(t, seg_s, cfg["shift_samples"], rng)
        rep.add("kinematic-count", "shift_integral", v, kinematic.count_oracle(t, seg_s), "abs<",
                se=se, sigmas=SIGMAS, tags=dict(tags, degenerate=deg))
        at = float(triangle_areas(t[None])[0])
        d = seg[1] - seg[0]
        length = float(np.linalg.norm(d))
        avg = avg_abs_dot(unit_normals(t[None])[0], d / length) * at * length
        rep.add("kinematic-count", "group_average", avg, at * length / math.sqrt(3), "<=", tol=EXACT, tags=tags)


# -- axis avoidance ---------------------------------------------------------------------


def _avoid_mesh(k: int, seed: int) -> TriMesh:
    rng = np.random.default_rng([seed, k])
    kind = k % 3
    if kind == 0:
        m = icosphere(1.0, 3)
    elif kind == 1:
        m = perturbed_sphere(1.0, 3, 0.2, int(rng.integers(2**31)))
    else:
        m = torus(2.0, 0.5, 48, 24)
    m = _scaled_to_area(m, rng.uniform(0.05, 0.5))
    lo, hi = m.bbox()
    room = 1 - (hi - lo)
    return m.translated(-lo + room * rng.uniform(0.05, 0.95, 3))


def run_avoid(cfg, rep: Report):
    given = _load_mesh(cfg)
    meshes = [given] if given is not None else [_avoid_mesh(k, cfg["seed"]) for k in range(cfg["meshes"])]
    for k, m in enumerate(meshes):
        area = mesh_area(m) if len(m) else 0.0
        tags = {"mesh": k, "area": area, "expected_hits": avoid.expected_axis_hits(m)}
        try:
            r = avoid.coordinate_subspace_avoid(m, seed=cfg["seed"] + k, max_draws=cfg["max_draws"])
        except SearchExhausted as e:
            rep.add("avoid", "hits", math.nan, 0, "==", tags=dict(tags, **e.report))
            continue
        hits, deg = avoid.axis_hits(m, r.t)
        rep.add("avoid", "hits", int(hits[0]), 0, "==", tags=dict(tags, t=r.t, degenerate=bool(deg[0])))
        rep.add("avoid", "draws", r.draws, report_only=True, tags={"mesh": k, "bad_fraction": r.bad_fraction})


# -- towers and nerve maps ----------------------------------------------------------------


def _tower(cfg, seed_key: str):
    lam = _lambda(3, cfg)
    st = foam.union_process(3, lam, cfg["resolution"], seed=cfg[seed_key])
    base = foam.foam_mesh(st, cfg["mc_res"])
    return tower.build_tower(st, base, cfg.get("m", 2), cfg["pose_samples"], cfg[seed_key]), lam


def run_tower(cfg, rep: Report):
    t, lam = _tower(cfg, "seed")
    rep.add("tower-setup", "lambda", lam, report_only=True)
    rep.add("tower-setup", "foam_steps", t.foam.steps, report_only=True)
    rep.add("tower-setup", "foam_separated", t.foam.separated, True, "==")
    errs = tower.containment_errors(t)
    for j in range(t.m + 1):
        rep.add("tower-level", "measure", t.measures[j], t.bounds[j], "<=", tags={"level": j})
        rep.add("tower-level", "containment_error", errs[j], tower.CONTAIN_TOL, "<", tags={"level": j})
    for row in tower.cell_checks(t, cfg["cells"], cfg["seed"]):
        rep.add("tower-cell", "measure", row["measure"], row["bound"], "<=",
                tags={"cell": row["cell"], "level": row["level"], "corner": row["corner"]})
    if not cfg["queries"]:
        return
    nm = nerve.NerveMap(t.foam, t.poses)
    box = cfg["query_box"]
    q = np.random.default_rng([cfg["seed"], 17]).uniform(-box, box, (cfg["queries"], 3))
    cov = nm.coverage(q)
    q = q[cov > 0]
    rep.add("nerve", "uncovered_queries", int((cov == 0).sum()), report_only=True,
            tags={"queries": cfg["queries"]})
    res = nm(q)
    rep.add("nerve", "sup_displacement", res.sup_displacement, 1.0, "<", tags={"queries": len(q)})
    rep.add("nerve", "copy_indices_distinct", res.complex.copy_indices_distinct(), True, "==")
    rep.add("nerve", "max_weight_sum_error", float(np.abs(res.weights.sum(axis=1) - 1).max()), EXACT, "<")
    rep.add("nerve", "complex_dimension", res.complex.dimension, report_only=True)


# -- width pipelines ------------------------------------------------------------------------


def run_width_highcodim(cfg, rep: Report):
    m = _load_mesh(cfg)
    if m is None:
        base = icosphere(1.0, cfg["subdivisions"])
        m = base.scaled(math.sqrt(cfg["hypothesis"] / pipeline.scaled_hypothesis(mesh_area(base))))
    area = mesh_area(m)
    rep.add("highcodim-setup", "hypothesis", pipeline.scaled_hypothesis(area), 1.0, "<", fail_code=2,
            tags={"area": area})
    t, lam = _tower(dict(cfg, m=1), "tower_seed")
    L = t.measures[1]
    rep.add("highcodim-setup", "sep1_length", L, t.bounds[1], "<=")
    artifacts, ok = {}, 0
    for k in range(cfg["seeds"]):
        s = cfg["seed"] + k
        try:
            cert, logs = pipeline.width_pipeline_highcodim(m, t, s, cfg["budget"], cfg["samples"],
                                                           routes=("separator",))
        except SearchExhausted as e:
            log = e.report["separator"]
            rep.add("highcodim-run", "success", False, report_only=True,
                    tags={"seed": s, "tried": len(log.masses), "uncovered": log.uncovered})
            continue
        ok += 1
        log = logs["separator"]
        tags = {"seed": s, "attempts": log.success_at + 1, "uncovered": log.uncovered}
        rep.add("highcodim-run", "success", True, report_only=True, tags=tags)
        rep.add("highcodim-run", "sup_displacement", cert.sup_displacement, 1.0, "<", tags=tags)
        rep.add("highcodim-run", "copy_indices_distinct", cert.target.copy_indices_distinct(), True, "==",
                tags=tags)
        if not artifacts:
            artifacts["certificate.txt"] = certificate_to_text(cert)
    rep.add("highcodim", "success_fraction", ok / cfg["seeds"] if cfg["seeds"] else 1.0, 0.9, ">=",
            report_only=True, tags={"seeds": cfg["seeds"], "budget": cfg["budget"]})
    # unbiased pose sample for the averaging bound: E[#] <= area length(SEP_1) / sqrt(3)
    counts = []
    for g in random_poses(3, cfg["mass_samples"], [cfg["seed"], 31]):
        counts.append(tower.periodic_seg_tri(t.levels[1].segs, g.inverse().apply(m.soup)).count)
    counts = np.array(counts, dtype=float)
    se = float(counts.std(ddof=1) / math.sqrt(len(counts))) if len(counts) > 1 else 0.0
    rep.add("highcodim", "mean_mass", float(counts.mean()) if len(counts) else 0.0, area * L / math.sqrt(3),
            "<=", se=se, sigmas=SIGMAS, tags={"poses": len(counts)})
    return artifacts


def _codim1_mesh(k: int, seed: int) -> TriMesh:
    rng = np.random.default_rng([seed, k])
    kind = k % 3
    if kind == 0:
        m = icosphere(1.0, 3)
    elif kind == 1:
        m = torus(2.0, 0.5, 48, 24)
    else:
        m = perturbed_sphere(1.0, 3, 0.2, int(rng.integers(2**31)))
    return m.scaled(float(np.exp(rng.uniform(-1, 1)))).translated(rng.uniform(-2, 2, 3))


def _codim1_one(m: TriMesh, k: int, cfg, rep: Report):
    tags = {"mesh": k}
    area = mesh_area(m)
    l = threeplane.codim1_side(area, cfg["eps"])
    rng = np.random.default_rng([cfg["seed"], k, 1])
    side = cubes.admissible_side(m, float(rng.uniform(0.5, 1.0)) * l, cfg["seed"] + k)
    dec = cubes.decompose(m, side, cfg["voxel_res"], cfg["seed"] + k)
    tags = dict(tags, side=side, cubes=len(dec.cubes))
    rep.add("codim1-cubes", "max_cube_area", dec.max_cube_area(), cubes.AREA_FRACTION, "<", fail_code=2,
            tags=tags)
    try:
        good = cubes.good_components(dec)
    except FalsificationError as e:
        rep.add("codim1-cubes", "good_component", str(e), "ok", "==", fail_code=4, tags=tags)
        good = {}
    if good:
        rep.add("codim1-cubes", "min_facet_fraction", min(g.min_facet_area for g in good.values()),
                cubes.FACET_FRACTION, ">", fail_code=4, tags=tags)
        rows = [r for g in good.values() for r in g.iso]
        rep.add("codim1-cubes", "isoperimetric_failures", sum(not r["pass"] for r in rows), 0, "==",
                fail_code=4, tags=dict(tags, pieces=len(rows)))
        rep.add("codim1-cubes", "max_facet_grid_error",
                max(float(g.facet_grid_error.max()) for g in good.values()), report_only=True, tags=tags)

    cert, T = threeplane.width_certificate_codim1(m, cfg["sweep_res"], cfg["seed"] + k, cfg["samples"], cfg["eps"])
    chk = threeplane.retraction_checks(T, cert.points)
    tags = {"mesh": k, "area": area, "t": T.t, "sweep_res": T.sweep_res}
    rep.add("codim1-certificate", "pairwise_hits", int(sum(T.hits)), 0, "==", tags=tags)
    rep.add("codim1-certificate", "same_cube", chk["same_cube"], True, "==", tags=tags)
    rep.add("codim1-certificate", "on_skeleton", chk["on_skeleton"], True, "==", tags=tags)
    rep.add("codim1-certificate", "sup_displacement", cert.sup_displacement, cert.claimed_bound, "<=", tags=tags)
    rep.add("codim1-certificate", "side", cert.claimed_bound, math.sqrt(3 * area) * (1 + cfg["eps"]), "abs<",
            tol=EXACT * cert.claimed_bound, tags=tags)
    return cert


def run_width_codim1(cfg, rep: Report):
    given = _load_mesh(cfg)
    if given is not None:
        cert = _codim1_one(given, 0, cfg, rep)
        return {"certificate.txt": certificate_to_text(cert)}
    for k in range(cfg["meshes"]):
        _codim1_one(_codim1_mesh(k, cfg["seed"]), k, cfg, rep)
    return {}


def run_essential_curve(cfg, rep: Report):
    m = _load_mesh(cfg)
    if m is None:
        m = _scaled_to_area(torus(cfg["major"], cfg["minor"], cfg["nu"], cfg["nv"]), 1 / 3 - cfg["eps"])
    area = mesh_area(m)
    side = cfg["side"] if cfg["side"] is not None else 4 * math.sqrt(3 * area)
    c = homology.essential_curve_in_cube(m, side, cfg["max_cubes"])
    tags = {"area": area, "side": side}
    rep.add("curve", "found", c is not None, True, "==", tags=tags)
    if c is None:
        return {}
    tags = dict(tags, cube_lo=c.cube_lo, cubes_scanned=c.cubes_scanned, length=len(c.cycle))
    rep.add("curve", "cocycle_pairing_nonzero", bool(any(c.pairing)), True, "==", tags=dict(tags, pairing=c.pairing))
    rep.add("curve", "boundary_rank_check", c.rank_check, True, "==", tags=tags)
    rep.add("curve", "inside_cube", c.inside(), True, "==", tags=tags)
    return {"curve.txt": curve_to_text(c.cycle)}


def run_gen_mesh(cfg, rep: Report):
    params = {k: cfg[k] for k in ("radius", "subdivisions", "major", "minor", "nu", "nv", "amplitude",
                                  "modes", "center")}
    m = generate_mesh(cfg["kind"], cfg["seed"], **params)
    if cfg["scale"]:
        m = m.scaled(cfg["scale"])
    area = mesh_area(m)
    s = cfg["scale"] or 1.0
    ref = {"icosphere": 4 * math.pi * cfg["radius"] ** 2,
           "torus": 4 * math.pi ** 2 * cfg["major"] * cfg["minor"]}.get(cfg["kind"])
    rep.add("mesh", "closed", is_closed(m), True, "==")
    chi = homology.SurfaceComplex.of(m).euler
    rep.add("mesh", "euler", chi, 0 if cfg["kind"] == "torus" else 2, "==")
    if ref is not None:
        ref *= s * s
        rep.add("mesh", "area_rel_error", abs(area - ref) / ref, 0.01, "<", report_only=True,
                tags={"area": area, "analytic": ref})
    else:
        rep.add("mesh", "area", area, report_only=True)
    return {"mesh.msh": mesh_to_text(m)}


RUNNERS = {
    "lemmas": run_lemmas,
    "foam-sweep": run_foam_sweep,
    "foam-union": run_foam_union,
    "kinematic": run_kinematic,
    "avoid": run_avoid,
    "tower": run_tower,
    "width-highcodim": run_width_highcodim,
    "width-codim1": run_width_codim1,
    "essential-curve": run_essential_curve,
    "gen-mesh": run_gen_mesh,
}
