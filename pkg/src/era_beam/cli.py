"""Command line interface: ``era-beam synthesize|sweep|pattern|validate``.

Exit codes: 0 success, 1 failed check, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from math import isqrt
from pathlib import Path

import numpy as np

from . import scenario_io
from .em_response import far_field_pattern, near_field_pattern
from .geometry import rayleigh_distance
from .harmonics import TruncationSpec, basis_matrix, unflatten
from .manifold import ProductPoint
from .synthesis import (
    Scenario,
    SolveResult,
    SolverConfig,
    embed_truncation,
    synthesize,
    synthesize_isotropic,
)

logger = logging.getLogger("era_beam")

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


def fmt(x: float) -> str:
    """Shortest repr that round-trips a double."""
    return repr(float(x))


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- result files ---------------------------------------------------------------

RESULT_HEADER = ["quantity", "element", "t", "l", "m", "sample", "real", "imag", "label"]


def result_rows(res: SolveResult, scn: Scenario, seed: int):
    N, T = scn.n_elements, scn.T
    rows = [
        ["meta", "", "", "", "", "", "", "", f"mode={res.mode}"],
        ["meta", "", "", "", "", "", scn.truncation.L, "", "L"],
        ["meta", "", "", "", "", "", N, "", "N"],
        ["meta", "", "", "", "", "", seed, "", "seed"],
        ["meta", "", "", "", "", "", fmt(scn.power), "", "power"],
        ["meta", "", "", "", "", "", fmt(res.residual), "", "residual"],
        ["meta", "", "", "", "", "", "", "", f"solver={res.solver}"],
    ]
    for n in range(N):
        for t in range(1, T + 1):
            idx = unflatten(t, scn.truncation.L)
            rows.append(["b", n + 1, t, idx.degree, idx.order, "", fmt(res.bmat[t - 1, n]), "", ""])
    for n in range(N):
        rows.append(["f", n + 1, "", "", "", "", fmt(res.f[n].real), fmt(res.f[n].imag), ""])
    for s, smp in enumerate(scn.samples):
        rows.append(["psi", "", "", "", "", s + 1, fmt(res.psi[s]), "", smp.kind])
        rows.append(["desired", "", "", "", "", s + 1, fmt(smp.desired), "", smp.kind])
        rows.append(["achieved", "", "", "", "", s + 1, fmt(res.achieved[s]), "", smp.kind])
    return rows


def read_result(path) -> dict:
    """Parse a result.csv back into coefficients, phases and metadata."""
    meta, coef, phase = {}, {}, {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_HEADER:
            raise ValueError(f"{path} is not a result file")
        for row in reader:
            q = row["quantity"]
            if q == "meta":
                if "=" in row["label"]:
                    k, v = row["label"].split("=", 1)
                    meta[k] = v
                else:
                    meta[row["label"]] = float(row["real"])
            elif q == "b":
                coef[(int(row["element"]), int(row["t"]))] = float(row["real"])
            elif q == "f":
                phase[int(row["element"])] = complex(float(row["real"]), float(row["imag"]))
    L, N = int(meta["L"]), int(meta["N"])
    T = (L + 1) ** 2
    bmat = np.zeros((T, N))
    for (n, t), v in coef.items():
        bmat[t - 1, n - 1] = v
    f = np.array([phase[n] for n in range(1, N + 1)])
    return {"meta": meta, "L": L, "N": N, "bmat": bmat, "f": f}


def pattern_grid_rows(res: SolveResult, scn: Scenario):
    if scn.regime == "far":
        th_deg = np.arange(0.0, 181.0, 2.0)
        ph_deg = np.arange(-180.0, 180.0, 2.0)
        TH, PH = np.meshgrid(th_deg, ph_deg, indexing="ij")
        mag = far_field_pattern(res.bmat, res.f, scn.geometry, scn.truncation,
                                np.radians(TH), np.radians(PH))
        header = ["theta_deg", "phi_deg", "magnitude"]
        rows = [[fmt(a), fmt(b), fmt(m)] for a, b, m in zip(TH.ravel(), PH.ravel(), mag.ravel())]
        return header, rows
    # near field: the YOZ plane around the samples
    pts = np.array([[s.target.x, s.target.y, s.target.z] for s in scn.samples])
    span = max(np.ptp(pts[:, 1]), np.ptp(pts[:, 2]), 1.0)
    ys = np.linspace(pts[:, 1].min() - 0.5 * span, pts[:, 1].max() + 0.5 * span, 61)
    zs = np.linspace(0.05 * span, pts[:, 2].max() + 0.5 * span, 61)
    Yg, Zg = np.meshgrid(ys, zs, indexing="ij")
    grid = np.column_stack([np.zeros(Yg.size), Yg.ravel(), Zg.ravel()])
    mag = near_field_pattern(res.bmat, res.f, scn.geometry, scn.truncation, grid)
    header = ["x", "y", "z", "magnitude"]
    return header, [[fmt(p[0]), fmt(p[1]), fmt(p[2]), fmt(m)] for p, m in zip(grid, mag)]


def run_solve(scn: Scenario, cfg: SolverConfig, mode: str) -> SolveResult:
    if mode == "isotropic":
        return synthesize_isotropic(scn, cfg)
    return synthesize(scn, cfg)


def write_outputs(out: Path, res: SolveResult, scn: Scenario, cfg: SolverConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(out / "result.csv", _csv_text(RESULT_HEADER, result_rows(res, scn, cfg.seed)))
    conv = [[k, fmt(v)] for k, v in enumerate(res.objective_history)]
    _write_atomic(out / "convergence.csv", _csv_text(["outer_iteration", "residual"], conv))
    header, rows = pattern_grid_rows(res, scn)
    _write_atomic(out / "pattern.csv", _csv_text(header, rows))


# -- commands -------------------------------------------------------------------

def cmd_synthesize(args) -> int:
    sf = scenario_io.load(args.scenario)
    scn = sf.to_scenario()
    cfg = sf.to_config(seed=args.seed, solver=args.solver)
    _warn_far_samples(scn)
    t0 = time.perf_counter()
    res = run_solve(scn, cfg, args.mode)
    wall = time.perf_counter() - t0
    # single-size analog of the sweep normalization: the isotropic residual of this array
    if res.mode == "isotropic":
        ref = res.residual
    else:
        ref = res.extra.get("isotropic_residual")
        if ref is None:
            ref = synthesize_isotropic(scn, cfg).residual
    normalized = res.residual / ref if ref > 0 else None
    out = Path(args.out)
    write_outputs(out, res, scn, cfg)
    record = {
        "scenario_hash": sf.digest(),
        "mode": res.mode,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "residual": res.residual,
        "normalized_residual": normalized,
        "wall_time_s": wall,
        "outer_iterations": res.outer_iterations,
        "inner_iterations": res.inner_iterations,
        "converged": res.converged,
        "linesearch_failures": res.linesearch_failures,
        "min_gain": res.min_gain,
    }
    _write_atomic(out / "run_record.json", json.dumps(record, indent=2) + "\n")
    print(f"{res.mode}: residual={fmt(res.residual)} outer={res.outer_iterations} "
          f"inner={res.inner_iterations} solver={res.solver} -> {out}")
    if res.min_gain is not None:
        print(f"min element gain on 1-degree grid: {fmt(res.min_gain)}")
    return EXIT_OK


def _warn_far_samples(scn: Scenario) -> None:
    if scn.regime != "near":
        return
    limit = rayleigh_distance(scn.geometry)
    for i, s in enumerate(scn.samples, 1):
        r = float(np.linalg.norm(s.target.position))
        if r > limit:
            logger.warning("sample %d at %.3g m lies beyond the Rayleigh distance %.3g m", i, r, limit)


def square_shape(N: int) -> tuple[int, int]:
    """Squarest nx*ny factorization with nx <= ny."""
    nx = isqrt(N)
    while N % nx:
        nx -= 1
    return nx, N // nx


def sweep_point(scn: Scenario, cfg: SolverConfig, N: int, l_list, linear: bool):
    """Isotropic baseline then L-nested warm-started ERA solves for one array size."""
    nx, ny = (1, N) if linear else square_shape(N)
    base = scn.with_array(nx, ny)
    iso = synthesize_isotropic(base, cfg)
    rows = [(N, "isotropic", None, iso.residual)]
    B = None
    f = iso.f
    for L in sorted(l_list):
        sL = base.with_truncation(L)
        if B is None:
            B0 = np.zeros((sL.T, N))
            B0[0] = 1.0
        else:
            B0 = embed_truncation(B, sL.T)
        res = synthesize(sL, cfg, initial=ProductPoint(B0, f))
        B, f = res.bmat / np.sqrt(sL.power), res.f
        rows.append((N, "era", L, res.residual))
    return rows


def run_sweep(scn: Scenario, cfg: SolverConfig, n_list, l_list, threads: int = 1):
    linear = scn.geometry.nx == 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda N: sweep_point(scn, cfg, N, l_list, linear), n_list))
    else:
        parts = [sweep_point(scn, cfg, N, l_list, linear) for N in n_list]
    rows = [r for part in parts for r in part]
    ref = next(r[3] for r in rows if r[0] == min(n_list) and r[1] == "isotropic")
    return [(N, mode, L, res, res / ref if ref > 0 else float("nan")) for N, mode, L, res in rows]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args) -> int:
    sf = scenario_io.load(args.scenario)
    scn = sf.to_scenario()
    cfg = sf.to_config(seed=args.seed)
    try:
        n_list = _int_list(args.n_list)
        l_list = _int_list(args.l_list)
    except ValueError:
        print("error: --n-list/--l-list must be comma-separated integers", file=sys.stderr)
        return EXIT_USAGE
    if not n_list or any(n < 1 for n in n_list) or any(L < 0 for L in l_list):
        print("error: invalid N or L list", file=sys.stderr)
        return EXIT_USAGE
    threads = int(os.environ.get("ERA_BEAM_THREADS", "1") or 1)
    rows = run_sweep(scn, cfg, n_list, l_list, max(1, threads))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = _csv_text(["N", "mode", "L", "residual", "normalized_residual"],
                     [[N, mode, "" if L is None else L, fmt(r), fmt(nr)] for N, mode, L, r, nr in rows])
    _write_atomic(out / "sweep.csv", text)
    for N, mode, L, r, nr in rows:
        print(f"N={N:3d} {mode:9s} L={'-' if L is None else L} normalized={nr:.6f}")
    return EXIT_OK


def cmd_pattern(args) -> int:
    data = read_result(args.result)
    n = args.element
    if not 1 <= n <= data["N"]:
        print(f"error: element {n} out of range 1..{data['N']}", file=sys.stderr)
        return EXIT_USAGE
    spec = TruncationSpec(data["L"])
    coeffs = data["bmat"][:, n - 1]
    if args.plane == "yoz":
        th = np.arange(0.0, 181.0, 1.0)
        ph = np.array([90.0, -90.0])
    else:
        th = np.arange(0.0, 181.0, 2.0)
        ph = np.arange(0.0, 360.0, 2.0)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    gain = basis_matrix(spec, np.radians(TH), np.radians(PH)) @ coeffs
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = [[fmt(a), fmt(b), fmt(g)] for a, b, g in zip(TH.ravel(), PH.ravel(), gain.ravel())]
    _write_atomic(out, _csv_text(["theta_deg", "phi_deg", "gain"], rows))
    crows = []
    for t in range(1, spec.T + 1):
        idx = unflatten(t, spec.L)
        crows.append([t, idx.degree, idx.order, fmt(coeffs[t - 1])])
    coef_path = out.with_name(out.stem + "_coefficients.csv")
    _write_atomic(coef_path, _csv_text(["t", "l", "m", "coefficient"], crows))
    print(f"element {n}: {len(rows)} pattern samples -> {out}; {spec.T} coefficients -> {coef_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .checks import run_all

    results = run_all()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="era-beam", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="optimize one scenario")
    s.add_argument("scenario")
    s.add_argument("--mode", choices=["era", "isotropic"], default="era")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--solver", choices=["cg", "gd"])
    s.set_defaults(func=cmd_synthesize)

    w = sub.add_parser("sweep", help="residual versus array size and truncation degree")
    w.add_argument("scenario")
    w.add_argument("--n-list", default="4,9,16,25,36")
    w.add_argument("--l-list", default="3,4,5", help="empty for isotropic only")
    w.add_argument("--out", required=True)
    w.add_argument("--seed", type=int)
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("pattern", help="export one element's radiation pattern")
    t.add_argument("result")
    t.add_argument("--element", type=int, default=1)
    t.add_argument("--plane", choices=["yoz", "grid"], default="yoz")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_pattern)

    v = sub.add_parser("validate", help="run the fast invariant checks")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except scenario_io.ScenarioError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
