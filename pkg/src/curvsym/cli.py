"""Command-line entry point: ``curvsym {analyze,verify,catalog,squaroid,wintgen}``.

Exit codes: 0 success, 1 error, 2 finished but a threshold decision was
borderline (analyze) or a check failed (verify, catalog, squaroid, wintgen).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import shapeops as so
from . import tensorlab as tl
from . import transport as tr
from .curvature import DiffConfig, curvature_bundle, metric_compatibility_residual, jet2_at
from .metricspace import (
    CATALOG_NAMES,
    MetricField,
    catalog_metric,
    parse_metric_spec,
    sample_points,
)
from .symmetry import classify, deszcz_L, sectional_K
from .tensorlab import Plane

__all__ = ["RunConfig", "main", "build_parser", "run_analyze", "run_verify", "run_catalog", "run_squaroid", "run_wintgen"]

JET_FD_TOL = 1e-5
TRANSPORT_TOL = 1e-9

COMMANDS = ("analyze", "verify", "catalog", "squaroid", "wintgen")


@dataclass
class RunConfig:
    command: str
    metric: str | None = None
    dim: int | None = None
    params: dict[str, float] = field(default_factory=dict)
    points: int = 20
    planes: int = 50
    seed: int = 0
    mode: str = "jet"
    fd_step: float = 1e-4
    tol: str = "strict"
    out: str | None = None
    format: str = "json"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.points < 1 or self.planes < 1:
            raise ValueError("--points and --planes must be >= 1")
        if self.format not in ("json", "csv"):
            raise ValueError("--format must be json or csv")

    @property
    def diff(self) -> DiffConfig:
        return DiffConfig(self.mode, self.fd_step, self.tol)


class CliError(Exception):
    pass


# -- helpers ---------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    return x


def dumps(doc) -> str:
    # repr of a float is the shortest string that round-trips exactly
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def load_metric(cfg: RunConfig) -> MetricField:
    spec = cfg.metric
    if spec is None:
        raise CliError("--metric is required")
    if spec in CATALOG_NAMES:
        params = dict(cfg.params)
        if cfg.dim is not None:
            params["n"] = cfg.dim
        return catalog_metric(spec, **params)
    if not os.path.isfile(spec):
        raise CliError(f"--metric {spec!r} is neither a catalog name ({', '.join(CATALOG_NAMES)}) nor a file")
    with open(spec, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as err:
        raise CliError(f"{spec}: not valid UTF-8 ({err})") from err
    f = parse_metric_spec(text, name=os.path.basename(spec))
    if cfg.dim is not None and cfg.dim != f.dim:
        raise CliError(f"--dim {cfg.dim} disagrees with the file's dim {f.dim}")
    return f


def _document(cfg: RunConfig, metric: str, params: dict, points=(), per_point=(), aggregate=None, suite=()):
    return {
        "metric": metric,
        "params": dict(params),
        "mode": cfg.mode,
        "seed": cfg.seed,
        "points": list(points),
        "per_point": list(per_point),
        "aggregate": aggregate or {},
        "suite": list(suite),
    }


def _flatten(prefix: str, x, out: dict):
    if isinstance(x, dict):
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(x, list) and any(isinstance(v, (dict, list)) for v in x):
        out[prefix] = json.dumps(x)
    elif isinstance(x, list):
        out[prefix] = ";".join(repr(v) if isinstance(v, float) else str(v) for v in x)
    else:
        out[prefix] = x


def to_csv(doc: dict) -> str:
    rows = doc["per_point"] or doc["suite"]
    flat = []
    for i, row in enumerate(rows):
        r: dict = {"index": i}
        _flatten("", _jsonable(row), r)
        flat.append(r)
    keys: list[str] = []
    for r in flat:
        keys.extend(k for k in r if k not in keys)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for r in flat:
        writer.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in keys})
    return buf.getvalue()


def emit(cfg: RunConfig, doc: dict) -> None:
    text = dumps(doc) if cfg.format == "json" else to_csv(doc)
    if cfg.out and cfg.out != "-":
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- analyze ---------------------------------------------------------------------


def run_analyze(cfg: RunConfig) -> tuple[int, dict]:
    f = load_metric(cfg)
    pts = sample_points(f, cfg.points, seed=cfg.seed)
    report = classify(f, pts, cfg.planes, cfg.diff, seed=cfg.seed)
    agg = dict(report.aggregate)
    agg["diagnostics"] = list(report.diagnostics)
    doc = _document(cfg, f.name, f.params, pts, [r.to_dict() for r in report.per_point], agg)
    return (2 if report.diagnostics else 0), doc


# -- verify ----------------------------------------------------------------------


def _weyl_trace(b) -> float:
    c = b.weyl
    worst = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            sub = "abcd"
            rest = "".join(ch for k, ch in enumerate(sub) if k not in (i, j))
            expr = f"{sub},{sub[i]}{sub[j]}->{rest}"
            worst = max(worst, float(np.max(np.abs(np.einsum(expr, c, b.ginv)))))
    return worst / (1.0 + float(np.max(np.abs(b.r04))))


def transport_drift(f: MetricField, seed: int = 0, h: float = 1e-3) -> float:
    """Gram drift of a transported orthonormal frame, per unit arclength.

    Starts at the box centre with a random unit direction; the length is one
    unit, shortened to stay well inside small boxes.
    """
    lo = np.array([a for a, _ in f.domain])
    hi = np.array([b for _, b in f.domain])
    p = 0.5 * (lo + hi)
    g = f.evaluate(p)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(f.dim)
    v /= math.sqrt(v @ g @ v)
    # g-orthonormal frame by Cholesky: columns of inv(L^T)
    frame = np.linalg.inv(np.linalg.cholesky(g).T).T
    s = min(1.0, 0.4 * float(np.min(hi - lo)))
    state = tr.CurveState(p, v, tuple(frame))
    end = tr.geodesic_step(f, state, s, h)
    g_end = f.evaluate(end.point)
    carried = np.array(end.carried)
    gram = carried @ g_end @ carried.T
    return float(np.max(np.abs(gram - np.eye(f.dim)))) / s


def identity_suite(f: MetricField, cfg: RunConfig) -> list[dict]:
    diff = cfg.diff
    tol = diff.tolerances.zero
    pts = sample_points(f, cfg.points, seed=cfg.seed)
    worst: dict[str, float] = {}

    def note(name, value):
        worst[name] = max(worst.get(name, 0.0), float(value))

    other = DiffConfig("fd" if diff.mode == "jet" else "jet", diff.fd_step if diff.mode == "fd" else 1e-4, diff.tol)
    for p in pts:
        b = curvature_bundle(f, p, diff)
        for k, v in tl.curvature_like_residuals(b.r04).items():
            note(f"R {k}", v)
        for k, v in tl.tensor06_residuals(b.rr).items():
            note(f"R.R {k}", v)
        for k, v in tl.tensor06_residuals(b.tach_r).items():
            note(f"Tachibana(R) {k}", v)
        tach_g = tl.tensor06_from_operator(tl.metric_endomorphisms(b.g), b.big_g)
        note("Tachibana(G) = 0", tl.relative_residual(tach_g, b.big_g))
        note("metric compatibility", metric_compatibility_residual(jet2_at(f, p, diff), b.gamma))
        if b.dim >= 3:
            note("Weyl trace-free", _weyl_trace(b))
        if b.dim == 3:
            note("Weyl vanishes (n=3)", tl.relative_residual(b.weyl, b.r04))
        b2 = curvature_bundle(f, p, other)
        note("jet vs finite differences", tl.relative_residual(b.r04 - b2.r04, b.r04))
    bounds = {"jet vs finite differences": JET_FD_TOL}
    rows = []
    for k, v in worst.items():
        bound = bounds.get(k, tol)
        rows.append({"identity": k, "max_residual": v, "tolerance": bound, "pass": v <= bound})
    drift = transport_drift(f, cfg.seed)
    rows.append({"identity": "transport isometry (per unit length)", "max_residual": drift, "tolerance": TRANSPORT_TOL, "pass": drift <= TRANSPORT_TOL})
    return rows


def run_verify(cfg: RunConfig) -> tuple[int, dict]:
    f = load_metric(cfg)
    rows = identity_suite(f, cfg)
    ok = all(r["pass"] for r in rows)
    doc = _document(cfg, f.name, f.params, aggregate={"passed": ok}, suite=rows)
    return (0 if ok else 2), doc


# -- catalog ---------------------------------------------------------------------

# (label, catalog name, params, expectation)
CATALOG_TABLE = (
    ("E3", "euclidean", {"n": 3}, ("constant_curvature", 0.0)),
    ("S3", "space_form", {"n": 3, "c": 1.0}, ("constant_curvature", 1.0)),
    ("H3", "space_form", {"n": 3, "c": -1.0}, ("constant_curvature", -1.0)),
    ("S2xE1", "product_s2xe1", {}, ("semi_symmetric", 0.0)),
    ("H2xE1", "product_h2xe1", {}, ("semi_symmetric", 0.0)),
    ("Nil", "thurston", {"m": 0.0, "l": 1.0}, ("rescaled", 1.0)),
    ("SL2R", "thurston", {"m": -0.25, "l": 1.0}, ("rescaled", 1.0)),
    # (1/4, 1) is the round sphere; l = 2 gives a proper Berger metric
    ("SU2", "thurston", {"m": 0.25, "l": 2.0}, ("rescaled", 1.0)),
    ("Sol", "sol", {}, ("pseudo_symmetric", -1.0)),
)


def catalog_row(label, name, params, expect, cfg: RunConfig) -> dict:
    f = catalog_metric(name, **params)
    pts = sample_points(f, cfg.points, seed=cfg.seed)
    rep = classify(f, pts, cfg.planes, cfg.diff, cfg.seed)
    agg = rep.aggregate
    flags = agg["flags"]
    kind, expected = expect
    lr = agg["L_R"]
    row = {
        "entry": label,
        "metric": name,
        "params": params,
        "flags": flags,
        "L_R_mean": lr["mean"],
        "L_R_max_deviation": lr["max_deviation"],
        "constant_type": agg["constant_type"],
        "ricci_multiplicities": list(rep.per_point[0].ricci.multiplicities),
        "expected": expected,
    }
    tol = cfg.diff.tolerances
    if kind == "constant_curvature":
        c = agg["schur"]["mean"]
        row["measured"] = c
        ok = flags["constant_curvature"] and c is not None and abs(c - expected) <= 1e-9 * (1 + abs(expected))
        if expected == 0.0:
            ok = ok and flags["flat"]
    elif kind == "semi_symmetric":
        worst = max(r.residuals["semi_symmetric"] for r in rep.per_point)
        row["measured"] = lr["mean"] if lr["mean"] is not None else 0.0
        row["semi_symmetry_residual"] = worst
        ok = flags["semi_symmetric"] and not flags["constant_curvature"] and worst <= 1e-9
    elif kind == "pseudo_symmetric":
        fit_res = max(r.fits["pseudo_symmetric"].residual for r in rep.per_point)
        row["measured"] = lr["mean"]
        row["fit_residual"] = fit_res
        ok = (
            flags["pseudo_symmetric"]
            and not flags["semi_symmetric"]
            and lr["count"] == len(pts)
            and abs(lr["mean"] - expected) <= 1e-8
            and fit_res <= 1e-9
        )
    else:
        # value 1 up to homothety: L(k g) = L(g) / k, so k = L(g) normalises
        l0 = lr["mean"]
        pattern = sorted(row["ricci_multiplicities"]) == [1, 2]
        ok = bool(l0 is not None and l0 > 0 and agg["constant_type"] and pattern)
        if ok:
            k = l0
            scaled = classify(f.scaled(k), pts, 0, cfg.diff, cfg.seed).aggregate["L_R"]["mean"]
            row["normalising_k"] = k
            row["L_R_rescaled"] = scaled
            ok = scaled is not None and abs(scaled - l0 / k) <= 1e-8 and abs(scaled - expected) <= 1e-8
            row["measured"] = scaled
        else:
            row["measured"] = l0
        ok = ok and lr["max_deviation"] <= tol.constant * (1 + abs(l0))
        iso = agg.get("deszcz_isotropy")
        if iso is not None:
            row["deszcz_max_point_std"] = iso["max_point_std"]
    row["pass"] = bool(ok)
    return row


def run_catalog(cfg: RunConfig) -> tuple[int, dict]:
    rows = [catalog_row(*entry, cfg) for entry in CATALOG_TABLE]
    ok = all(r["pass"] for r in rows)
    doc = _document(cfg, "catalog", {}, aggregate={"passed": ok}, suite=rows)
    return (0 if ok else 2), doc


# -- squaroid --------------------------------------------------------------------


def _vector(text: str | None, n: int):
    if text is None:
        return None
    vals = [float(t) for t in text.split(",")]
    if len(vals) != n:
        raise CliError(f"expected {n} comma-separated numbers, got {text!r}")
    return np.array(vals)


def run_squaroid(cfg: RunConfig) -> tuple[int, dict]:
    f = load_metric(cfg)
    n = f.dim
    ex = cfg.extra
    lo = np.array([a for a, _ in f.domain])
    hi = np.array([b for _, b in f.domain])
    p = _vector(ex.get("point"), n)
    p = 0.5 * (lo + hi) if p is None else p
    eye = np.eye(n)
    v = _vector(ex.get("v"), n)
    w = _vector(ex.get("w"), n)
    v = eye[0] + eye[n - 1] if v is None else v
    w = eye[1] if w is None else w
    axes = tuple(int(t) for t in ex.get("axes", f"0,{n - 1}").split(","))
    if len(axes) != 2:
        raise CliError("--axes needs two comma-separated indices")
    g = f.evaluate(p)
    plane = Plane(v, w).orthonormal(g)
    eps_list = [float(t) for t in ex.get("eps", "1e-2,5e-3").split(",")]
    kind = ex.get("kind", "deszcz")
    b = curvature_bundle(f, p, cfg.diff)
    oracle_k = sectional_K(b, plane)
    oracle_l = deszcz_L(b, plane, Plane(eye[axes[0]], eye[axes[1]]))
    rows = []
    for eps in eps_list:
        if kind == "riemann":
            res = tr.squaroid_riemann(f, p, plane.v, plane.w, eps)
        else:
            res = tr.squaroid_deszcz(f, p, plane.v, plane.w, axes[0], axes[1], eps, eps)
        rows.append(res.to_dict())
    agg = {"sectional_K": oracle_k, "deszcz_L": oracle_l}
    key = "K_estimate" if kind == "riemann" else "L_estimate"
    if len(rows) >= 2:
        agg[f"{key}_extrapolated"] = tr.richardson(rows[-2][key], rows[-1][key])
    doc = _document(cfg, f.name, f.params, [p], aggregate=agg, suite=rows)
    return 0, doc


# -- wintgen ---------------------------------------------------------------------


def run_wintgen(cfg: RunConfig) -> tuple[int, dict]:
    ex = cfg.extra
    rows = []
    if ex.get("input"):
        with open(ex["input"], encoding="utf-8") as fh:
            sets = json.load(fh)
        if isinstance(sets, dict):
            sets = [sets]
        for doc in sets:
            s = so.load_shape_operators(doc)
            rows.append({"n": s.n, "m": s.m, **so.wintgen_quantities(s).to_dict()})
    else:
        rng = np.random.default_rng(cfg.seed)
        for _ in range(int(ex.get("random", 1000))):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, 5))
            s = so.random_shape_operator_set(rng, n, m)
            rows.append({"n": n, "m": m, **so.wintgen_quantities(s).to_dict()})
    min_slack = min(r["slack"] for r in rows)
    ok = min_slack >= -1e-10
    doc = _document(cfg, "shape_operators", {}, aggregate={"count": len(rows), "min_slack": min_slack, "inequality_holds": ok}, suite=rows)
    return (0 if ok else 2), doc


RUNNERS = {
    "analyze": run_analyze,
    "verify": run_verify,
    "catalog": run_catalog,
    "squaroid": run_squaroid,
    "wintgen": run_wintgen,
}


# -- argument parsing ------------------------------------------------------------


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    k, v = text.split("=", 1)
    try:
        return k.strip(), float(v)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad value in {text!r}") from err


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--metric", help="catalog name or metric spec file")
    common.add_argument("--dim", type=int, help="dimension for euclidean / space_form")
    common.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE",
                        help="catalog parameter, e.g. c=-1 or m=0.25 (repeatable)")
    common.add_argument("--points", type=int, default=20)
    common.add_argument("--planes", type=int, default=50)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mode", choices=("jet", "fd"), default="jet")
    common.add_argument("--fd-step", type=float, default=1e-4)
    common.add_argument("--tol", choices=("strict", "fd"), default="strict")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="curvsym", description="Curvature-symmetry analysis of Riemannian metrics.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="classify a metric at sampled points")
    sub.add_parser("verify", parents=[common], help="run the algebraic identity suite")
    sub.add_parser("catalog", parents=[common], help="Thurston and space-form acceptance table")
    sq = sub.add_parser("squaroid", parents=[common], help="squaroid estimates of K or L")
    sq.add_argument("--kind", choices=("riemann", "deszcz"), default="deszcz")
    sq.add_argument("--point", help="comma-separated chart point (default: box centre)")
    sq.add_argument("--v", help="first plane vector")
    sq.add_argument("--w", help="second plane vector")
    sq.add_argument("--axes", help="coordinate axes of the loop plane, e.g. 0,2")
    sq.add_argument("--eps", help="comma-separated epsilons (delta = epsilon)")
    wg = sub.add_parser("wintgen", parents=[common], help="Wintgen inequality quantities")
    wg.add_argument("--input", help="JSON shape-operator set or list of sets")
    wg.add_argument("--random", type=int, help="number of random sets (default 1000)")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    extra = {k: getattr(ns, k) for k in ("kind", "point", "v", "w", "axes", "eps", "input", "random")
             if getattr(ns, k, None) is not None}
    return RunConfig(
        command=ns.command,
        metric=ns.metric,
        dim=ns.dim,
        params=dict(ns.param),
        points=ns.points,
        planes=ns.planes,
        seed=ns.seed,
        mode=ns.mode,
        fd_step=ns.fd_step,
        tol=ns.tol,
        out=ns.out,
        format=ns.format,
        extra=extra,
    )


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        code, doc = RUNNERS[cfg.command](cfg)
        emit(cfg, doc)
    except Exception as err:  # noqa: BLE001 - every failure maps to exit 1
        print(f"curvsym {ns.command}: error: {err}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    raise SystemExit(main())
