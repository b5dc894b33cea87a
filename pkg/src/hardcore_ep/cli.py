"""Command-line front end: ``hardcore-ep <experiment> --config <path>``.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .config import (
    DYNAMICS_HOP_SCALE,
    EXPERIMENTS,
    SCHEMA,
    angle_label,
    bundled_golden_dir,
    lattice_from_block,
    load,
    n_list,
    parse_angle,
    validate,
)
from .dynamics import (
    evolve,
    fidelity,
    fit_power_law,
    fringe_contrast,
    independent_particle_probability,
    site_profile,
    total_probability,
)
from .errors import ConfigError, DomainError, NumericalError, ResourceLimitError
from .fockspace import FockBasis, build_hamiltonian, pt_defect, site_permutation
from .lattice import (
    LatticeSpec,
    condensate_energy,
    critical_momenta,
    inversion_permutation,
    resonant_parameters,
    stacked_boundary_sites,
)
from .spectra import Tolerances, classify
from .states import (
    WavepacketSpec,
    biorthogonal_overlap,
    condensate,
    correlation,
    gaussian_wavepacket,
    odlro_value,
    product_state,
    random_state,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4

DEFAULT_CRITERIA = {
    "residual": 1e-10,
    "overlap_zero": 1e-10,
    "overlap_min": 1e-3,
    "odlro": 1e-12,
    "final_fidelity": 0.99,
    "slope": 2.0,
    "slope_tol": 0.1,
    "fringe_ratio": 3.0,
    "curve_agreement": 0.02,
}


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


@dataclass
class RunResult:
    """Files to write (name -> text), console lines and acceptance checks."""

    files: dict[str, str] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)


# ---------------------------------------------------------------- formatting

def fmt(x: float) -> str:
    return format(float(x), ".17g")


def header_block(config: dict, extra: Optional[dict] = None) -> str:
    meta = {"tool": "hardcore-ep", "version": __version__, "config": config}
    if extra:
        meta.update(extra)
    return "# " + json.dumps(meta, sort_keys=True, default=str) + "\n"


def csv_text(config: dict, columns: Sequence[str], rows: Sequence[Sequence], extra: Optional[dict] = None) -> str:
    buf = io.StringIO()
    buf.write(header_block(config, extra))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o)}")


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pmap(fn: Callable, items: list, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _criteria(config: dict) -> dict:
    crit = dict(DEFAULT_CRITERIA)
    crit.update(config.get("criteria", {}))
    return crit


def _tolerances(config: dict) -> Tolerances:
    return Tolerances(**config.get("tolerances", {}))


def _q_label(q: Sequence) -> str:
    return "(" + ",".join(angle_label(x) for x in q) + ")"


def _cases(config: dict) -> list[dict]:
    if "cases" in config:
        return config["cases"]
    return [{"lattice": config["lattice"], "n": config["n"]}]


def _sector(lat: LatticeSpec, n: int) -> FockBasis:
    if n > lat.n_sites:
        raise ConfigError(f"n={n} exceeds the {lat.n_sites} lattice sites")
    return FockBasis(lat.n_sites, n)


# ---------------------------------------------------------------- spectrum

def _spectrum_cell(args) -> dict:
    block, q, n, tol = args
    lat = lattice_from_block(block, q)
    basis = _sector(lat, n)
    H = build_hamiltonian(lat, None, basis)
    parity = site_permutation(basis, inversion_permutation(lat))
    defect = pt_defect(H, parity)
    report = classify(H, Tolerances(**tol), pt_symmetric=defect <= 1e-12 * max(1.0, H.max_abs()))
    d = report.as_dict()
    d.update({"q": [angle_label(x) for x in q], "n": n, "pt_defect": defect,
              "stacked_boundary_sites": stacked_boundary_sites(lat)})
    return d


def run_spectrum(config: dict, threads: int = 1) -> RunResult:
    block = config["lattice"]
    grid = config.get("q_grid") or [block.get("q", [0.0])]
    tol = asdict(_tolerances(config))
    cells = [(block, q, n, tol) for q in grid for n in n_list(config["n"])]
    reports = _pmap(_spectrum_cell, cells, threads)
    res = RunResult()
    name = config["name"]
    rows = []
    for (_, q, n, _), rep in zip(cells, reports):
        rows.append(f"{_q_label(q)} {n} {rep['summary']}")
        res.lines.append(f"q={_q_label(q)} n={n} dim={rep['dim']} -> {rep['summary']}"
                         + (f"  [{'; '.join(rep['flags'])}]" if rep["flags"] else ""))
    res.files[f"{name}.json"] = json_text({"config": config, "cells": reports})
    res.files[f"{name}.txt"] = header_block(config, {"tolerances": tol}) + "# q n summary\n" + "\n".join(rows) + "\n"
    res.checks.extend(_golden_checks(config, rows))
    return res


def read_table(path: Path) -> dict[tuple[str, str], str]:
    table = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        q, n, summary = line.split()
        table[(q, n)] = summary
    return table


_GOLDEN_DIR: Optional[Path] = None


def _golden_checks(config: dict, rows: list[str]) -> list[Check]:
    if _GOLDEN_DIR is None:
        return []
    path = _GOLDEN_DIR / config.get("golden", f"{config['name']}.txt")
    if not path.exists():
        return [Check(f"golden {path.name}", False, "golden file missing")]
    expected = read_table(path)
    out = []
    for row in rows:
        q, n, got = row.split()
        want = expected.get((q, n))
        out.append(Check(f"cell q={q} n={n}", got == want, f"got {got}, expected {want}"))
    return out


# ---------------------------------------------------------------- verify / overlap / odlro

def run_verify(config: dict, threads: int = 1) -> RunResult:
    crit = _criteria(config)
    res = RunResult()
    rows = []
    seed = config.get("seed", 0)
    for k, case in enumerate(_cases(config)):
        lat = lattice_from_block(case["lattice"])
        label = case.get("label", f"case{k}")
        for n in n_list(case["n"]):
            basis = _sector(lat, n)
            H = build_hamiltonian(lat, None, basis)
            E = condensate_energy(lat, n)
            psi = condensate(lat, n, basis=basis)
            r = float(np.linalg.norm(H.matrix @ psi.amplitudes - E * psi.amplitudes))
            ok = r <= crit["residual"]
            rows.append([label, "condensate", _q_label(lat.q), n, E, r, int(ok)])
            res.checks.append(Check(f"residual {label} n={n}", ok, f"{r:.3e}"))
            if basis.dim > 1:
                ctrl = random_state(basis, seed)
                rc = float(np.linalg.norm(H.matrix @ ctrl.amplitudes - E * ctrl.amplitudes))
                rows.append([label, "random-control", _q_label(lat.q), n, E, rc, int(rc > crit["residual"])])
    res.files[f"{config['name']}.csv"] = csv_text(
        config, ["case", "state", "q", "n", "energy", "residual", "pass"], rows, {"criteria": crit})
    res.lines.append(f"{sum(c.passed for c in res.checks)}/{len(res.checks)} eigenstate residuals within {crit['residual']:g}")
    return res


def _first_open_axis(lat: LatticeSpec) -> Optional[int]:
    for a in lat.active_axes:
        if lat.is_open(a):
            return a
    return None


def _is_critical(lat: LatticeSpec) -> bool:
    """True when some open axis has ``q = pi m / N`` with ``m`` not a multiple of ``N``."""
    for a in lat.active_axes:
        if not lat.is_open(a):
            continue
        m = lat.q[a] * lat.dims[a] / math.pi
        if abs(m - round(m)) < 1e-9 and round(m) % lat.dims[a] != 0:
            return True
    return False


def run_overlap(config: dict, threads: int = 1) -> RunResult:
    crit = _criteria(config)
    res = RunResult()
    rows = []
    for k, case in enumerate(_cases(config)):
        base = lattice_from_block(case["lattice"])
        label = case.get("label", f"case{k}")
        points: list[tuple[LatticeSpec, str]] = []
        axis = _first_open_axis(base)
        if config.get("scan_critical") and axis is not None:
            qc = critical_momenta(base.dims[axis])
            for i, q in enumerate(qc):
                points.append((_with_axis_q(base, axis, q), "critical"))
                if i + 1 < len(qc):
                    points.append((_with_axis_q(base, axis, 0.5 * (q + qc[i + 1])), "midpoint"))
        else:
            points.append((base, "critical" if _is_critical(base) else "non-EP"))
        for lat, kind in points:
            for n in n_list(case["n"]):
                basis = _sector(lat, n)
                psi = condensate(lat, n, -1, basis)
                phi = condensate(lat, n, +1, basis)
                ov = biorthogonal_overlap(phi, psi)
                if n == 0:
                    kind_n, ok = "vacuum", True
                elif kind == "critical":
                    kind_n, ok = kind, abs(ov) <= crit["overlap_zero"]
                elif kind == "midpoint":
                    kind_n, ok = kind, abs(ov) > crit["overlap_min"]
                else:
                    kind_n, ok = kind, True
                q_text = ",".join(fmt(x) for x in lat.q)
                rows.append([label, f"({q_text})", n, kind_n, ov.real, ov.imag, abs(ov), int(ok)])
                if kind_n in ("critical", "midpoint"):
                    res.checks.append(Check(f"overlap {label} q=({q_text}) n={n} [{kind_n}]", ok, f"|<phi|psi>|={abs(ov):.3e}"))
    res.files[f"{config['name']}.csv"] = csv_text(
        config, ["case", "q", "n", "kind", "overlap_re", "overlap_im", "overlap_abs", "pass"], rows, {"criteria": crit})
    res.lines.append(f"{sum(c.passed for c in res.checks)}/{len(res.checks)} overlap checks passed")
    return res


def _with_axis_q(lat: LatticeSpec, axis: int, q: float) -> LatticeSpec:
    qs = list(lat.q)
    qs[axis] = q
    return lat.with_q(qs)


def _displacements(lat: LatticeSpec):
    ranges = []
    for a in range(3):
        n = lat.dims[a]
        ranges.append(range(-(n - 1), n) if lat.is_open(a) else range(0, n))
    for R1 in ranges[0]:
        for R2 in ranges[1]:
            for R3 in ranges[2]:
                yield (R1, R2, R3)


def run_odlro(config: dict, threads: int = 1) -> RunResult:
    from .lattice import site_coords

    crit = _criteria(config)
    res = RunResult()
    rows = []
    for k, case in enumerate(_cases(config)):
        lat = lattice_from_block(case["lattice"])
        label = case.get("label", f"case{k}")
        N = lat.n_sites
        for n in n_list(case["n"]):
            basis = _sector(lat, n)
            psi = condensate(lat, n, basis=basis)
            expected = odlro_value(N, n)
            worst, pairs, dens_dev = 0.0, 0, 0.0
            for i in range(N):
                r = site_coords(i, lat)
                for R in _displacements(lat):
                    try:
                        c = correlation(psi, lat, r, R)
                    except DomainError:
                        continue
                    if R == (0, 0, 0):
                        dens_dev = max(dens_dev, abs(c - n / N))
                        continue
                    pairs += 1
                    worst = max(worst, abs(abs(c) - expected))
            ok = worst <= crit["odlro"] and dens_dev <= crit["odlro"]
            rows.append([label, n, pairs, expected, worst, dens_dev, int(ok)])
            res.checks.append(Check(f"odlro {label} n={n}", ok, f"max deviation {worst:.3e} over {pairs} pairs"))
    res.files[f"{config['name']}.csv"] = csv_text(
        config, ["case", "n", "pairs", "expected_abs", "max_abs_deviation", "density_deviation", "pass"],
        rows, {"criteria": crit})
    res.lines.append(f"{sum(c.passed for c in res.checks)}/{len(res.checks)} correlation checks passed")
    return res


# ---------------------------------------------------------------- dynamics

def _time_grid(config: dict) -> tuple[float, Optional[float], Optional[float], str]:
    t = config["time"]
    return float(t["t_max"]), t.get("dt"), t.get("sample_interval"), t.get("method", "auto")


def _stride(dt: float, interval: Optional[float]) -> int:
    return 1 if interval is None else max(1, int(round(interval / dt)))


def _scatter_run(args) -> dict:
    block, n, qp_raw, wp, time, window = args
    lat = lattice_from_block(block, default_hop_scale=DYNAMICS_HOP_SCALE)
    if lat.ndim > 1:
        raise ConfigError("scattering runs need a one-dimensional lattice")
    basis = _sector(lat, n)
    H = build_hamiltonian(lat, None, basis)
    spec = WavepacketSpec(float(wp["alpha"]), float(wp["N0"]), parse_angle(qp_raw), n)
    psi0 = gaussian_wavepacket(basis, spec, lat)
    t_max = float(time["t_max"])
    dt = time.get("dt") or t_max / math.ceil(t_max / (0.01 / H.row_sum_bound()))
    traj = evolve(H, psi0, t_max, dt, _stride(dt, time.get("sample_interval")), time.get("method", "auto"))
    p = site_profile(traj)
    P = total_probability(traj)
    # the lossy end is where the boundary potential has negative imaginary part
    mu = resonant_parameters(lat).mu_first[lat.active_axes[0]] if lat.ndim else 0j
    N = lat.n_sites
    sites = list(range(window)) if mu.imag < 0 else list(range(N - window, N))
    fr = fringe_contrast(traj.times, p, sites)
    return {"n": n, "q": angle_label(qp_raw), "times": traj.times, "P": P, "p": p,
            "norm_sq": traj.norm_sq, "fringe": fr.contrast, "fringe_time": fr.time, "dt": traj.dt}


def run_scatter(config: dict, threads: int = 1) -> RunResult:
    crit = _criteria(config)
    wp = config["wavepacket"]
    packet_qs = wp["q"] if isinstance(wp["q"], list) else [wp["q"]]
    window = config.get("fringe_window", 15)
    jobs = [(config["lattice"], n, qp, wp, config["time"], window)
            for n in n_list(config["n"]) for qp in packet_qs]
    runs = _pmap(_scatter_run, jobs, threads)
    lat = lattice_from_block(config["lattice"], default_hop_scale=DYNAMICS_HOP_SCALE)
    q_res = abs(lat.q[lat.active_axes[0]]) if lat.ndim else 0.0
    res = RunResult()
    name = config["name"]
    summary = []
    for k, run in enumerate(runs):
        stem = f"{name}_n{run['n']}_q{packet_qs.index(jobs[k][2])}"
        rows = [[t, P, n2] for t, P, n2 in zip(run["times"], run["P"], run["norm_sq"])]
        res.files[f"{stem}.csv"] = csv_text(config, ["t", "P", "norm_sq"], rows,
                                            {"n": run["n"], "packet_q": run["q"], "dt": run["dt"]})
        nd = [header_block(config, {"n": run["n"], "packet_q": run["q"], "dt": run["dt"]}).lstrip("# ")]
        for t, pj in zip(run["times"], run["p"]):
            nd.append(json.dumps({"t": float(t), "p": [float(x) for x in pj]}) + "\n")
        res.files[f"{stem}.ndjson"] = "".join(nd)
        summary.append({"n": run["n"], "packet_q": run["q"], "final_P": float(run["P"][-1]),
                        "fringe_contrast": run["fringe"], "fringe_time": run["fringe_time"], "file": stem})
        res.lines.append(f"n={run['n']} q={run['q']}: final P={run['P'][-1]:.4f}, fringe={run['fringe']:.3f}")

    by_n: dict[int, list[dict]] = {}
    for run in runs:
        by_n.setdefault(run["n"], []).append(run)
    for n, group in by_n.items():
        qv = [abs(parse_angle(r["q"])) for r in group]
        res_idx = [i for i, q in enumerate(qv) if abs(q - q_res) < 1e-12]
        if len(res_idx) != 1:
            continue
        r0 = group[res_idx[0]]
        for i, r in enumerate(group):
            if i == res_idx[0]:
                continue
            ok = r0["P"][-1] < r["P"][-1]
            res.checks.append(Check(f"n={n} final P resonant < q={r['q']}", ok,
                                    f"{r0['P'][-1]:.4f} vs {r['P'][-1]:.4f}"))
            ratio = r["fringe"] / r0["fringe"]
            res.checks.append(Check(f"n={n} fringe ratio q={r['q']} / resonant >= {crit['fringe_ratio']:g}",
                                    ratio >= crit["fringe_ratio"], f"{ratio:.2f}"))
    ns = sorted(by_n)
    free = []
    if len(ns) > 1:
        base = by_n[ns[0]]
        for n in ns[1:]:
            for r1, rn in zip(base, by_n[n]):
                diff = float(np.abs(r1["P"] - rn["P"]).max())
                res.checks.append(Check(f"P(t) n={ns[0]} vs n={n} q={r1['q']} within {crit['curve_agreement']:g}",
                                        diff <= crit["curve_agreement"], f"max difference {diff:.4f}"))
                if config.get("free_boson_check") and ns[0] == 1:
                    pred = independent_particle_probability(r1["P"], n)
                    free.append({"n": n, "packet_q": r1["q"],
                                 "max_abs_dev_from_P1_power_n": float(np.abs(pred - rn["P"]).max())})
    res.files[f"{name}_summary.json"] = json_text({"config": config, "criteria": crit, "runs": summary,
                                                   "free_boson": free,
                                                   "checks": [asdict(c) for c in res.checks]})
    return res


def _generate_run(args) -> dict:
    block, q_raw, n, time, window, sign = args
    base = lattice_from_block(block, default_hop_scale=DYNAMICS_HOP_SCALE)
    axis = base.active_axes[0] if base.ndim else 0
    qs = list(block.get("q", [0.0]))
    qs += [0.0] * (3 - len(qs))
    qs[axis] = q_raw
    lat = lattice_from_block(block, qs, DYNAMICS_HOP_SCALE)
    basis = _sector(lat, n)
    H = build_hamiltonian(lat, None, basis)
    t_max = float(time["t_max"])
    dt = time.get("dt") or 0.01 / H.row_sum_bound()
    traj = evolve(H, product_state(basis, range(n)), t_max, dt,
                  _stride(dt, time.get("sample_interval")), time.get("method", "auto"))
    F = fidelity(traj, condensate(lat, n, sign, basis))
    F_partner = fidelity(traj, condensate(lat, n, -sign, basis))
    P = total_probability(traj)
    w = window or (t_max / 10, t_max)
    fit = fit_power_law(traj.times, P, tuple(w))
    return {"q": angle_label(q_raw), "n": n, "times": traj.times, "P": P, "F": F, "F_partner": F_partner,
            "norm_sq": traj.norm_sq, "slope": fit.slope, "stderr": fit.stderr, "window": list(w), "dt": traj.dt}


def _generate_jobs(config: dict) -> list:
    window = config.get("fit", {}).get("window")
    sign = config.get("target_sign", -1)
    jobs = []
    for run in config["runs"]:
        if not isinstance(run, dict) or set(run) - {"q", "n"} or not {"q", "n"} <= set(run):
            raise ConfigError("each generate run needs exactly the keys 'q' and 'n'")
        parse_angle(run["q"])
        for n in n_list(run["n"]):
            jobs.append((config["lattice"], run["q"], n, config["time"], window, sign))
    return jobs


def run_generate(config: dict, threads: int = 1) -> RunResult:
    crit = _criteria(config)
    jobs = _generate_jobs(config)
    runs = _pmap(_generate_run, jobs, threads)
    res = RunResult()
    name = config["name"]
    summary = []
    for k, run in enumerate(runs):
        stem = f"{name}_{k:02d}_n{run['n']}"
        rows = [list(r) for r in zip(run["times"], run["P"], run["F"], run["F_partner"], run["norm_sq"])]
        res.files[f"{stem}.csv"] = csv_text(config, ["t", "P", "F", "F_partner", "norm_sq"], rows,
                                            {"q": run["q"], "n": run["n"], "dt": run["dt"]})
        F_final = float(run["F"][-1])
        summary.append({"q": run["q"], "n": run["n"], "final_F": F_final,
                        "final_F_partner": float(run["F_partner"][-1]), "slope": run["slope"],
                        "slope_stderr": run["stderr"], "fit_window": run["window"], "file": stem})
        okF = F_final >= crit["final_fidelity"]
        okS = abs(run["slope"] - crit["slope"]) <= crit["slope_tol"]
        res.checks.append(Check(f"q={run['q']} n={run['n']} final F >= {crit['final_fidelity']:g}", okF, f"{F_final:.6f}"))
        res.checks.append(Check(f"q={run['q']} n={run['n']} slope {crit['slope']:g}±{crit['slope_tol']:g}", okS,
                                f"{run['slope']:.4f}±{run['stderr']:.4f}"))
        res.lines.append(f"q={run['q']} n={run['n']}: F={F_final:.6f}, slope={run['slope']:.4f}±{run['stderr']:.4f}")
    res.files[f"{name}_summary.json"] = json_text({"config": config, "criteria": crit, "runs": summary,
                                                   "checks": [asdict(c) for c in res.checks]})
    return res


# ---------------------------------------------------------------- sweep

def _sweep_job(args) -> RunResult:
    sub, golden = args
    global _GOLDEN_DIR
    _GOLDEN_DIR = golden
    return RUNNERS[sub["experiment"]](sub, 1)


def run_sweep(config: dict, threads: int = 1) -> RunResult:
    subs = []
    for k, sub in enumerate(config["runs"]):
        sub = dict(sub)
        sub.setdefault("name", f"{config['name']}_{k:02d}_{sub['experiment']}")
        subs.append(sub)
    results = _pmap(_sweep_job, [(s, _GOLDEN_DIR) for s in subs], threads)
    res = RunResult()
    for sub, r in zip(subs, results):
        for fname, text in r.files.items():
            res.files[f"{sub['name']}/{fname}"] = text
        res.lines.extend(f"[{sub['name']}] {line}" for line in r.lines)
        res.checks.extend(Check(f"[{sub['name']}] {c.name}", c.passed, c.detail) for c in r.checks)
    return res


RUNNERS: dict[str, Callable[[dict, int], RunResult]] = {
    "spectrum": run_spectrum,
    "verify": run_verify,
    "overlap": run_overlap,
    "odlro": run_odlro,
    "scatter": run_scatter,
    "generate": run_generate,
    "sweep": run_sweep,
}


def run_config(config: dict, threads: int = 1, golden: Optional[Path] = None) -> RunResult:
    """Run a validated config. With ``golden`` set, table cells are compared
    against fixtures in that directory."""
    global _GOLDEN_DIR
    config = validate(config)
    config.setdefault("name", config["experiment"])
    _GOLDEN_DIR = Path(golden) if golden is not None else None
    try:
        return RUNNERS[config["experiment"]](config, threads)
    finally:
        _GOLDEN_DIR = None


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardcore-ep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run a {name} config")
        p.add_argument("--config", required=True, help="JSON config path or bundled config name")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--check", metavar="GOLDEN_DIR", nargs="?", const="bundled",
                       help="evaluate acceptance checks; tables are compared with GOLDEN_DIR "
                            "(default: the bundled fixtures)")
        p.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    sub.add_parser("schema", help="print the config JSON schema")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "schema":
        print(json.dumps(SCHEMA, indent=1, sort_keys=True))
        return EXIT_OK
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        config = load(args.config)
        if config["experiment"] != args.command:
            raise ConfigError(f"config is for {config['experiment']!r}, not {args.command!r}")
        golden = None
        if args.check is not None:
            golden = bundled_golden_dir() if args.check == "bundled" else Path(args.check)
            if not golden.is_dir():
                raise ConfigError(f"golden directory {str(golden)!r} not found")
        result = run_config(config, args.threads, golden)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        extra = f" (last good time {exc.last_good_time:g})" if exc.last_good_time is not None else ""
        print(f"numerical failure: {exc}{extra}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    out = Path(args.out)
    for fname, text in sorted(result.files.items()):
        write_atomic(out / fname, text)
    for line in result.lines:
        print(line)
    if args.check is not None:
        for c in result.checks:
            print(c.line())
        failed = sum(not c.passed for c in result.checks)
        print(f"{len(result.checks) - failed}/{len(result.checks)} checks passed")
        if failed:
            return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
