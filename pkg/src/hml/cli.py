"""Command-line front end: verification families over (k, x) grids and the acceptance suite."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import acceptance
from . import offdiag as od
from .bessel import bessel_j_oscillatory, bessel_j_series
from .cache import cache_get_or_build, default_cache_dir
from .equidist import EquidistReport, equidist_report
from .moments import moment_report, sharp_sum
from .numeric import Precision
from .petersson import default_cmax, harmonic_average, trace_rhs
from .records import VerificationRecord, fmt_num, plain, rows_csv
from .voronoi import SmoothingParams, default_cutoff, transform_tail_estimate, voronoi_transform, w_tilde_table

__all__ = ["RunConfig", "ConfigError", "main", "run", "x_grid", "delta_for", "COMMANDS", "DELTA_RULES"]

log = logging.getLogger("hml")

COMMANDS = ("eigen", "weights", "trace-check", "bessel-check", "voronoi-check", "moments", "discrepancy",
            "offdiag-check", "accept")
DELTA_RULES = ("x23k13", "x12k35", "explicit")
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    k_list: tuple = ()
    x_count: int = 3
    delta_rule: str = "x12k35"
    delta: float | None = None
    prec_bits: int = 128
    epsilon: float = 0.001
    cache_dir: str = ""
    output: str = "-"
    format: str = "csv"
    jobs: int = 1
    n_max: int | None = None
    series_cutoff: int = 10 ** 5
    c_max: int | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command != "accept" and not self.k_list:
            raise ConfigError(f"{self.command} needs at least one weight (--k)")
        for k in self.k_list:
            if k % 2 or k < 12:
                raise ConfigError(f"weights must be even and >= 12, got {k}")
        if self.prec_bits < 64:
            raise ConfigError("--prec-bits must be >= 64")
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if self.x_count < 1:
            raise ConfigError("--x-count must be >= 1")
        if self.delta_rule not in DELTA_RULES:
            raise ConfigError(f"--delta-rule must be one of {', '.join(DELTA_RULES)}")
        if self.delta_rule == "explicit" and self.delta is None:
            raise ConfigError("--delta-rule explicit needs --delta")
        if self.format not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if not 0 < self.epsilon < 1:
            raise ConfigError("--epsilon must lie in (0, 1)")

    @property
    def prec(self) -> Precision:
        return Precision(self.prec_bits)


def x_grid(k: int, count: int) -> list[float]:
    """x_j = k^2/(8 pi^2) (1 + j/sqrt(2)), j = 0..count-1."""
    base = k * k / (8 * math.pi ** 2)
    return [base * (1 + j / math.sqrt(2)) for j in range(count)]


def delta_for(cfg: RunConfig, k: int, x: float) -> float:
    if cfg.delta_rule == "x23k13":
        return x ** (2 / 3) * k ** (1 / 3 - cfg.epsilon)
    if cfg.delta_rule == "x12k35":
        return x ** 0.5 * k ** 0.6
    return float(cfg.delta)


def _basis(cfg: RunConfig, k: int, need: int):
    n = max(need, cfg.n_max or 0, 2)
    return cache_get_or_build(k, n, cfg.prec, cfg.cache_dir)


# -- per-cell workers (module level so they pickle) -----------------------------------

def _cell_eigen(cfg: RunConfig, k: int):
    n_max = cfg.n_max or 1000
    basis = _basis(cfg, k, n_max)
    rows, recs = [], []
    tol = 2.0 ** -(cfg.prec_bits // 2)
    for f in basis.forms:
        r = acceptance.eigen_integrity(f, n_max)
        worst = max(r["mult_residual"], r["hecke_residual"])
        ok = r["deligne_ratio"] <= 1 + tol and worst <= tol
        rows.append((k, basis.dim, f.field_tag, n_max, f.lam[0], f.lam[1] if n_max > 1 else 1,
                     r["deligne_ratio"], worst, "PASS" if ok else "FAIL"))
        recs.append(VerificationRecord.bound("eigen.hecke", {"k": k, "form": f.field_tag, "n_max": n_max},
                                             worst, tol))
        recs.append(VerificationRecord("eigen.deligne", {"k": k, "form": f.field_tag, "n_max": n_max},
                                       r["deligne_ratio"], 1.0, r["deligne_ratio"] - 1, tol,
                                       r["deligne_ratio"] <= 1 + tol))
    return rows, recs


def _cell_weights(cfg: RunConfig, k: int):
    basis = _basis(cfg, k, cfg.n_max or 2)
    with cfg.prec.ctx(16):
        one = sum(basis.weights) if basis.dim else 0
    target = trace_rhs(1, 1, k, cfg.c_max, cfg.prec).value
    with cfg.prec.ctx():
        dev = abs(one - target) if basis.dim else 0
    rows = [(k, basis.dim, f.field_tag, w) for f, w in zip(basis.forms, basis.weights)]
    recs = [VerificationRecord.bound("weights.normalization", {"k": k, "dim": basis.dim}, dev, 1e-20, lhs=one,
                                     rhs=target),
            VerificationRecord.bound("weights.residual", {"k": k}, basis.residual, 1e-10)]
    return rows, recs


def _cell_trace(cfg: RunConfig, k: int):
    basis = _basis(cfg, k, 64)
    d = basis.dim
    rows, recs = [], []
    pairs = [(m, n) for m in range(1, 4) for n in range(m, d + 6) if not (m == 1 and n <= d)]
    for m, n in pairs:
        cm = cfg.c_max or default_cmax(m, n, k)
        with cfg.prec.ctx(16):
            avg = harmonic_average(basis, [f.lambda_(m) * f.lambda_(n) for f in basis.forms]) if d else 0
        tr = trace_rhs(m, n, k, cm, cfg.prec)
        with cfg.prec.ctx():
            dev = abs(avg - tr.value)
        tol = 1e-20 + 10 * float(tr.tail_bound)
        rows.append((k, m, n, cm, avg, tr.value, dev, tol))
        recs.append(VerificationRecord.bound("trace.identity", {"k": k, "m": m, "n": n, "c_max": cm}, dev, tol,
                                             lhs=avg, rhs=tr.value))
    return rows, recs


def _cell_bessel(cfg: RunConfig, k: int):
    nu = k - 1
    rows, recs = [], []
    for z in acceptance.c3_grid(nu):
        ref = bessel_j_series(nu, z, cfg.prec)
        asym, env = bessel_j_oscillatory(nu, z, cfg.prec)
        with cfg.prec.ctx():
            dev = abs(ref - asym)
        rows.append((nu, z, ref, asym, dev, env))
        recs.append(VerificationRecord.bound("bessel.cross_regime", {"nu": nu, "z": z}, dev, env, lhs=ref, rhs=asym))
    return rows, recs


def _cell_voronoi(cfg: RunConfig, k: int, x: float):
    delta = delta_for(cfg, k, x)
    if delta > x ** (1 - cfg.epsilon):
        delta = x ** (1 - cfg.epsilon)
    p = SmoothingParams(delta, x, k)
    n_cut = default_cutoff(p)
    basis = _basis(cfg, k, max(n_cut, int(math.floor(2 * x))))
    table = w_tilde_table(p, n_cut)
    tail = transform_tail_estimate(table, x)
    tol = 10 * x * math.log(x) / delta
    rows, recs = [], []
    for f in basis.forms:
        s = sharp_sum(f, x)
        t = voronoi_transform(f, x, p, n_cutoff=n_cut, table=table, tail_tol=math.inf, epsilon=cfg.epsilon)
        dev = abs(float(s) - float(t))
        rows.append((k, x, delta, f.field_tag, s, t, dev, tol, tail))
        recs.append(VerificationRecord.bound("voronoi.residual", {"k": k, "x": x, "delta": delta,
                                                                  "form": f.field_tag, "tail_estimate": tail},
                                             dev, tol, lhs=s, rhs=t))
    return rows, recs


def _cell_moments(cfg: RunConfig, k: int, x: float):
    basis = _basis(cfg, k, int(math.floor(2 * x)))
    rep = moment_report(basis, x, series_cutoff=cfg.series_cutoff, with_diag=False)
    row = (rep.k, x, rep.dim, rep.first, rep.first_main, rep.first_err, rep.second, rep.second_main,
           rep.second_err, rep.variance, rep.variance_main, rep.s_over_x13, rep.delta_used, rep.prec_bits)
    recs = [VerificationRecord.bound("moments.first", {"k": k, "x": x}, rep.first_err,
                                     5 * math.sqrt(x) / k ** 0.9, lhs=rep.first, rhs=rep.first_main),
            VerificationRecord.bound("moments.monitor", {"k": k, "x": x}, rep.s_over_x13, 20.0)]
    return [row], recs


def _cell_discrepancy(cfg: RunConfig, k: int, x: float):
    N = cfg.n_max or 10 ** 4
    rep: EquidistReport = equidist_report(N, x, k - 1, prec=cfg.prec)
    p = rep.params or (None, None, None)
    row = (rep.x, rep.kappa, rep.N, rep.z_count, rep.z_expected, rep.d_star, rep.et_bound, rep.et_R,
           str(p[0]), str(p[1]), str(p[2]))
    recs = [VerificationRecord("equidist.bracket", {"x": x, "kappa": k - 1, "N": N}, rep.d_lower, rep.et_bound,
                               rep.d_lower, rep.et_bound, rep.d_lower <= rep.et_bound),
            VerificationRecord("equidist.z_count", {"x": x, "kappa": k - 1, "N": N}, rep.z_count, rep.z_expected,
                               abs(rep.z_count - rep.z_expected), rep.d_upper,
                               abs(rep.z_count - rep.z_expected) <= rep.d_upper)]
    return [row], recs


def _cell_offdiag(cfg: RunConfig, k: int, x: float):
    delta = delta_for(cfg, k, x)
    rows, recs = [], []
    try:
        bound = od.offdiag_bound_report(k, x, delta, cfg.epsilon)
        rows.append((k, x, delta, "bound_total", bound.total, ";".join(fmt_num(t) for t in bound.terms)))
    except ValueError as exc:
        rows.append((k, x, delta, "bound_total", float("nan"), str(exc)))
    P = od.OffDiagParams(k, x, delta, 1, 1, 1.0, 1, cfg.epsilon)
    bad = P.admissible()
    if delta > x ** (2 / 3) * k ** (1 / 3 - cfg.epsilon):
        bad.append("delta <= x^(2/3) k^(1/3-eps)")
    if bad:
        # outside the standing assumptions the checks are undefined; report and move on
        rows.append((k, x, delta, "inadmissible", float("nan"), "; ".join(bad)))
        return rows, recs
    lhs, rhs, lt = od.poisson_sides(P, 0, 1)
    res = abs(lhs - rhs) / (abs(lhs) + 2.0 ** -40)
    rows.append((k, x, delta, "poisson_c1", res, str(lt)))
    recs.append(VerificationRecord.bound("offdiag.poisson", {"k": k, "x": x, "delta": delta, "m": 1, "c": 1},
                                         res, 1e-6, lhs=lhs, rhs=rhs))
    a, _, _, d = od._g_edges(P)
    y = math.sqrt(a * d)
    n = max(1, round(4 * math.pi * math.sqrt(x) / y))
    Pn = od.OffDiagParams(k, x, delta, 1, 1, 1.0, n, cfg.epsilon)
    try:
        spec = od.partition_spec(Pn)
        full = od.dual_integral(Pn, 1, spec=spec)
        win = od.dual_integral(Pn, 1, windowed=True, spec=spec)
        rel = abs(full - win) / abs(full) if full else 0.0
        rows.append((k, x, delta, f"window_n{n}", rel, od.regime(Pn, spec) or "none"))
        recs.append(VerificationRecord.bound("offdiag.window", {"k": k, "x": x, "delta": delta, "n": n,
                                                                "y0": spec.y0, "L": spec.L}, rel, 1e-3,
                                             lhs=full, rhs=win))
    except od.NoStationaryPoint as exc:
        rows.append((k, x, delta, f"window_n{n}", float("nan"), str(exc)))
    return rows, recs


COLUMNS = {
    "eigen": ("k", "dim", "form", "n_max", "lambda1", "lambda2", "deligne_ratio", "hecke_residual", "status"),
    "weights": ("k", "dim", "form", "weight"),
    "trace-check": ("k", "m", "n", "c_max", "average", "trace_rhs", "deviation", "tolerance"),
    "bessel-check": ("nu", "z", "series", "asymptotic", "deviation", "envelope"),
    "voronoi-check": ("k", "x", "delta", "form", "sharp_sum", "transform", "residual", "tolerance", "tail_estimate"),
    "moments": acceptance.MOMENT_COLUMNS,
    "discrepancy": acceptance.EQUIDIST_COLUMNS,
    "offdiag-check": ("k", "x", "delta", "quantity", "value", "note"),
}
HEX = {"moments": ("first", "first_main", "second", "second_main", "variance"),
       "discrepancy": ("d_star", "et_bound")}
CELLS = {
    "eigen": (_cell_eigen, False),
    "weights": (_cell_weights, False),
    "trace-check": (_cell_trace, False),
    "bessel-check": (_cell_bessel, False),
    "voronoi-check": (_cell_voronoi, True),
    "moments": (_cell_moments, True),
    "discrepancy": (_cell_discrepancy, True),
    "offdiag-check": (_cell_offdiag, True),
}


def _apply(item):
    fn, cfg, args = item
    return fn(cfg, *args)


def _ordered_map(items, jobs: int):
    if jobs <= 1:
        return [_apply(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_apply, items, chunksize=1))


def _emit(text: str, output: str) -> None:
    if output == "-":
        sys.stdout.write(text)
        return
    Path(output).parent.mkdir(parents=True, exist_ok=True)
    Path(output).write_text(text)


def _render(cfg: RunConfig, rows, recs) -> str:
    if cfg.format == "json":
        cols = COLUMNS[cfg.command]
        body = {"rows": [dict(zip(cols, plain(list(r)))) for r in rows],
                "records": [r.to_dict() for r in recs]}
        return json.dumps(body, indent=1, sort_keys=True) + "\n"
    return rows_csv(COLUMNS[cfg.command], rows, HEX.get(cfg.command, ()))


def run(cfg: RunConfig) -> int:
    """Execute one command; 0 when every asserted tolerance holds, 2 otherwise."""
    cfg.validate()
    if cfg.command == "accept":
        return _run_accept(cfg)
    fn, per_x = CELLS[cfg.command]
    # prebuild each weight once so that workers only ever read the cache
    if cfg.command in ("eigen", "weights", "trace-check", "voronoi-check", "moments"):
        for k in cfg.k_list:
            need = {"eigen": cfg.n_max or 1000, "weights": 2, "trace-check": 64}.get(cfg.command)
            if need is None:
                xs = x_grid(k, cfg.x_count)
                need = int(math.floor(2 * max(xs)))
                if cfg.command == "voronoi-check":
                    need = max(need, max(default_cutoff(SmoothingParams(
                        min(delta_for(cfg, k, x), x ** (1 - cfg.epsilon)), x, k)) for x in xs))
            _basis(cfg, k, need)
    items = []
    for k in cfg.k_list:
        if per_x:
            items += [(fn, cfg, (k, x)) for x in x_grid(k, cfg.x_count)]
        else:
            items.append((fn, cfg, (k,)))
    results = _ordered_map(items, cfg.jobs)
    rows = [r for res in results for r in res[0]]
    recs = [r for res in results for r in res[1]]
    _emit(_render(cfg, rows, recs), cfg.output)
    failed = [r for r in recs if not r.passed]
    for r in failed:
        log.warning("tolerance failure: %s %s residual=%s tolerance=%s", r.check, plain(r.params),
                    fmt_num(r.residual) if r.residual is not None else "-", r.tolerance)
    return EXIT_FAIL if failed else EXIT_OK


def _run_accept(cfg: RunConfig) -> int:
    out = Path("accept_out" if cfg.output == "-" else cfg.output)
    result = acceptance.run_suite(cfg.cache_dir, jobs=cfg.jobs, prec=cfg.prec)
    acceptance.write_outputs(result, out)
    for c in result.criteria:
        print(c.line())
    print(f"outputs written to {out}")
    return EXIT_OK if result.passed else EXIT_FAIL


def _parse_k(text: str) -> tuple:
    if not text:
        return ()
    try:
        return tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad weight list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hml", description="Verification laboratory for moments of Hecke "
                                                         "eigenvalue sums in the large-weight regime.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--k", type=_parse_k, default=(), help="comma-separated even weights >= 12")
    ap.add_argument("--x-count", type=int, default=3, help="grid points x_j = k^2/(8 pi^2)(1 + j/sqrt 2)")
    ap.add_argument("--delta-rule", default="x12k35", choices=DELTA_RULES)
    ap.add_argument("--delta", type=float, default=None, help="delta for --delta-rule explicit")
    ap.add_argument("--prec-bits", type=int, default=128)
    ap.add_argument("--epsilon", type=float, default=0.001)
    ap.add_argument("--cache-dir", default=None, help="defaults to $HML_CACHE_DIR or ~/.cache/hml")
    ap.add_argument("--out", default="-", help="output file ('-' for stdout); a directory for accept")
    ap.add_argument("--format", default="csv", choices=("csv", "json"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--nmax", type=int, default=None, help="eigenvalue table length (N for discrepancy)")
    ap.add_argument("--series-cutoff", type=int, default=10 ** 5)
    ap.add_argument("--cmax", type=int, default=None, help="Kloosterman modulus cutoff")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    cfg = RunConfig(
        command=ns.command, k_list=ns.k, x_count=ns.x_count, delta_rule=ns.delta_rule, delta=ns.delta,
        prec_bits=ns.prec_bits, epsilon=ns.epsilon, cache_dir=str(ns.cache_dir or default_cache_dir()),
        output=ns.out, format=ns.format, jobs=ns.jobs, n_max=ns.nmax, series_cutoff=ns.series_cutoff,
        c_max=ns.cmax,
    )
    try:
        return run(cfg)
    except ConfigError as exc:
        ap.print_usage(sys.stderr)
        print(f"hml: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ArithmeticError, ValueError) as exc:
        print(f"hml: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
