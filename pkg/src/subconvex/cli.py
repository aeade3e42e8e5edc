"""Command-line driver.

Every command reads an optional JSON config (--config) whose keys are the
long option names with dashes replaced by underscores; flags given on the
command line override the file.  Tabular output is CSV with a fixed header,
floats written with repr() so they round-trip exactly.

Exit codes: 0 success, 1 usage error, 2 precision failure, 3 suite failure.

CSV headers
    scan     Q,chi_index,status,abs_L,L_re,L_im,truncation_error,root_number_residual
    coeffs   n,a_n
    lvalue   Q,chi_index,s_re,s_im,L_re,L_im,Lstar_re,Lstar_im,truncation_error,split_point
    amplify  Q,chi_index,X,L,S,bound,a_zero_term,exact_residual,slack,scale
    shifted  method,re,im,tail,terms
    selberg  t,h,h_three_step,h_single_step        (--side h)
             r,g,k                                  (--side k)
    geom-check  rho,B_series,B_direct,B_bound
    mfun     method,re,im
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import amplifier, geom, lfunc, selberg, shifted, special, suites
from .arith import primes_in
from .chars import enumerate_characters
from .qexp import FormSpecError, PrecisionError, QExpansion, load_or_expand, sup_norm_estimate

EXIT_OK, EXIT_USAGE, EXIT_PRECISION, EXIT_SUITE = 0, 1, 2, 3

SCAN_HEADER = ["Q", "chi_index", "status", "abs_L", "L_re", "L_im", "truncation_error", "root_number_residual"]


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x) -> str:
    return repr(float(x))


def _cplx(text) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"not a complex number: {text!r}") from exc


def _write_csv(header: list[str], rows, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if out is None or out == "-":
        sys.stdout.write(buf.getvalue())
    else:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(buf.getvalue())


def _figure_path(out: str | None) -> Path | None:
    if out is None or out == "-":
        return None
    return Path(out).with_suffix(".png")


# ---------------------------------------------------------------- config


@dataclass
class SweepConfig:
    form: str = "eta(8z)^3"
    q_min: int = 101
    q_max: int = 499
    primes_only: bool = True
    characters: str = "all"  # "all" or "sample:N"
    seed: int = 0
    budget: int = 1 << 17
    rn_tol: float = 1e-6
    theta: float = lfunc.THETA_KIM_SARNAK
    workers: int = 1
    cache_dir: str | None = None

    def validate(self) -> None:
        if self.q_min < 1 or self.q_max < 0:
            raise UsageError("Q range must be positive")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if self.characters != "all":
            _sample_size(self.characters)

    def moduli(self) -> list[int]:
        if self.q_max < self.q_min:
            return []
        if self.primes_only:
            return primes_in(self.q_min, self.q_max)
        return list(range(self.q_min, self.q_max + 1))


def _sample_size(policy: str) -> int:
    kind, _, n = policy.partition(":")
    if kind != "sample" or not n.isdigit() or int(n) < 1:
        raise UsageError(f"character policy must be 'all' or 'sample:N', got {policy!r}")
    return int(n)


def _merge(defaults: dict, args: argparse.Namespace) -> dict:
    merged = dict(defaults)
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(data) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


# ---------------------------------------------------------------- scan


_WORKER_FORM: QExpansion | None = None


def _init_worker(form: str, budget: int, cache_dir: str | None) -> None:
    global _WORKER_FORM
    _WORKER_FORM = load_or_expand(form, budget, cache_dir)


def selected_characters(Q: int, policy: str, seed: int):
    prim = [c for c in enumerate_characters(Q) if c.primitive]
    if policy == "all" or not prim:
        return prim
    n = min(_sample_size(policy), len(prim))
    rng = np.random.default_rng([seed, Q])
    pick = np.sort(rng.choice(len(prim), size=n, replace=False))
    return [prim[i] for i in pick]


def scan_rows_for_Q(f: QExpansion, Q: int, policy: str, seed: int, rn_tol: float) -> list[list[str]]:
    chars = selected_characters(Q, policy, seed)
    if not chars:
        return []
    try:
        rows = lfunc.central_values_all(f, Q, chars)
    except PrecisionError:
        return [[str(Q), str(c.index), "precision_error"] + ["nan"] * 5 for c in chars]
    out = []
    for r in rows:
        status = "ok" if r.root_number_residual <= rn_tol else "fe_residual"
        out.append([str(r.Q), str(r.chi_index), status, _num(abs(r.value)), _num(r.value.real), _num(r.value.imag),
                    _num(r.truncation_error), _num(r.root_number_residual)])
    return out


def _scan_job(job: tuple[int, str, int, float]) -> list[list[str]]:
    Q, policy, seed, rn_tol = job
    return scan_rows_for_Q(_WORKER_FORM, Q, policy, seed, rn_tol)


@dataclass(frozen=True)
class ScanSummary:
    form: str
    seed: int
    n_moduli: int
    n_rows: int
    n_failed: int
    exponent: float | None
    intercept: float | None
    reference_convexity: float
    reference_subconvex: float


def fit_exponent(rows: list[list[str]]) -> tuple[list[int], list[float], tuple[float, float] | None]:
    """Least-squares fit of log max|L| against log Q over rows with status ok."""
    best: dict[int, float] = {}
    for r in rows:
        if r[2] != "ok":
            continue
        Q, v = int(r[0]), float(r[3])
        best[Q] = max(best.get(Q, 0.0), v)
    Qs = sorted(q for q in best if best[q] > 0)
    maxima = [best[q] for q in Qs]
    if len(Qs) < 2:
        return Qs, maxima, None
    slope, icpt = np.polyfit(np.log(Qs), np.log(maxima), 1)
    return Qs, maxima, (float(slope), float(icpt))


def run_scan(cfg: SweepConfig) -> tuple[list[list[str]], ScanSummary]:
    cfg.validate()
    moduli = cfg.moduli()
    if moduli:
        needed = 2.0 * math.sqrt(load_or_expand(cfg.form, 8, None).N) * max(moduli) * 1.01
        if cfg.budget < needed:
            raise UsageError(f"coefficient budget {cfg.budget} below {math.ceil(needed)}")
    jobs = [(Q, cfg.characters, cfg.seed, cfg.rn_tol) for Q in moduli]
    rows: list[list[str]] = []
    if jobs:
        if cfg.workers == 1:
            _init_worker(cfg.form, cfg.budget, cfg.cache_dir)
            for job in jobs:
                rows.extend(_scan_job(job))
        else:
            # warm the cache once so workers only read it
            load_or_expand(cfg.form, cfg.budget, cfg.cache_dir)
            with ProcessPoolExecutor(cfg.workers, initializer=_init_worker,
                                     initargs=(cfg.form, cfg.budget, cfg.cache_dir)) as pool:
                for chunk in pool.map(_scan_job, jobs):  # map preserves job order
                    rows.extend(chunk)
    rows.sort(key=lambda r: (int(r[0]), int(r[1])))
    _, _, fit = fit_exponent(rows)
    failed = sum(r[2] == "precision_error" for r in rows)
    summary = ScanSummary(cfg.form, cfg.seed, len(moduli), len(rows), failed,
                          None if fit is None else fit[0], None if fit is None else fit[1],
                          lfunc.CONVEXITY_EXPONENT, lfunc.subconvex_exponent(cfg.theta))
    return rows, summary


def cmd_scan(args) -> int:
    defaults = asdict(SweepConfig())
    cfg = SweepConfig(**_merge(defaults, args))
    rows, summary = run_scan(cfg)
    _write_csv(SCAN_HEADER, rows, args.out)
    fig = _figure_path(args.out)
    if fig is not None and not args.no_plot and summary.n_moduli:
        from .report import scan_figure

        Qs, maxima, fit = fit_exponent(rows)
        if Qs:
            scan_figure(Qs, maxima, fit, {"convexity": summary.reference_convexity,
                                          "subconvex": summary.reference_subconvex}, fig)
    print(json.dumps(asdict(summary)), file=sys.stderr)
    return EXIT_PRECISION if summary.n_failed else EXIT_OK


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    try:
        results = suites.run_suite(args.suite)
    except KeyError as exc:
        raise UsageError(f"unknown suite {args.suite!r}") from exc
    report = {"suite": args.suite, "passed": all(r.passed for r in results),
              "checks": [r.as_dict() for r in results]}
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if report["passed"] else EXIT_SUITE


# ---------------------------------------------------------------- thin wrappers


def cmd_coeffs(args) -> int:
    if args.M < 0:
        raise UsageError("M must be non-negative")
    f = load_or_expand(args.form, args.M, args.cache_dir)
    rows = [[str(n), str(a)] for n, a in enumerate(f.coeffs[: args.M + 1].tolist())]
    _write_csv(["n", "a_n"], rows, args.out)
    return EXIT_OK


def _characters(Q: int, index: int | None):
    chars = [c for c in enumerate_characters(Q) if c.primitive]
    if index is None:
        return chars
    picked = [c for c in chars if c.index == index]
    if not picked:
        raise UsageError(f"no primitive character with index {index} mod {Q}")
    return picked


def cmd_lvalue(args) -> int:
    f = load_or_expand(args.form, args.budget, args.cache_dir)
    s = _cplx(args.s)
    rows = []
    for chi in _characters(args.Q, args.chi):
        res = lfunc.completed_L_multiplicative(f, s, chi)
        L = res.value / lfunc.gamma_prefactor(f, s, args.Q)
        rows.append([str(args.Q), str(chi.index), _num(s.real), _num(s.imag), _num(L.real), _num(L.imag),
                     _num(res.value.real), _num(res.value.imag), _num(res.truncation_error), _num(res.split_point)])
    _write_csv(["Q", "chi_index", "s_re", "s_im", "L_re", "L_im", "Lstar_re", "Lstar_im", "truncation_error",
                "split_point"], rows, args.out)
    return EXIT_OK


def cmd_amplify(args) -> int:
    f = load_or_expand(args.form, args.budget, args.cache_dir)
    H = amplifier.default_bump()
    rows = []
    for chi in _characters(args.Q, args.chi):
        rep = amplifier.amplification_inequality_check(f, chi, H, args.X, args.L)
        rows.append([str(args.Q), str(chi.index), _num(args.X), _num(args.L), _num(rep.S), _num(rep.bound),
                     _num(rep.a_zero_term), _num(rep.exact_residual), _num(rep.slack), _num(rep.scale)])
    _write_csv(["Q", "chi_index", "X", "L", "S", "bound", "a_zero_term", "exact_residual", "slack", "scale"],
               rows, args.out)
    return EXIT_OK


def cmd_shifted(args) -> int:
    f = load_or_expand(args.form, args.m_max, args.cache_dir)
    s, w = _cplx(args.s), _cplx(args.w)
    if s.real <= 1.0 or w.real <= 1.0:
        raise UsageError("Z_Q is summed only for Re s, Re w > 1")
    a = shifted.Z_Q_bruteforce(f, s, w, args.Q, args.l1, args.l2, args.m_max)
    b = shifted.Z_Q_oldform(f, s, w, args.Q, args.l1, args.l2, args.m_max)
    scale = (args.l1 * args.l2) ** ((f.k - 1.0) / 2.0)
    rows = [["bruteforce", _num(a.value.real), _num(a.value.imag), _num(a.tail), str(a.terms)],
            ["oldform", _num((b.value * scale).real), _num((b.value * scale).imag), _num(b.tail),
             str(b.terms)]]
    _write_csv(["method", "re", "im", "tail", "terms"], rows, args.out)
    return EXIT_OK


def cmd_selberg(args) -> int:
    if args.T <= 0:
        raise UsageError("T must be positive")
    pair = selberg.localizer(args.T, r_max=args.r_max)
    if args.side == "h":
        t = np.linspace(0.0, args.t_max, args.points)
        h3 = selberg.forward_three_step(pair, t_scale=args.t_max + 4.0).h_side(t)
        h1 = selberg.forward_single_step(pair, pair.r_max)(t)
        h0 = pair.h_side(t)
        cols = {"h": h0, "h_three_step": h3, "h_single_step": h1}
        header, x = ["t", "h", "h_three_step", "h_single_step"], t
    else:
        r = np.linspace(0.0, args.r_max, args.points)
        cols = {"g": pair.g_side(r), "k": pair.k_radial(r)}
        header, x = ["r", "g", "k"], r
    rows = [[_num(x[i])] + [_num(np.real(v[i])) for v in cols.values()] for i in range(x.size)]
    _write_csv(header, rows, args.out)
    fig = _figure_path(args.out)
    if fig is not None and not args.no_plot:
        from .report import curves_figure

        curves_figure(x, {k: np.real(v) for k, v in cols.items()}, fig, xlabel=header[0])
    if args.roundtrip:
        print(json.dumps(asdict(selberg.localizer_roundtrips(args.T, args.r_max))), file=sys.stderr)
    return EXIT_OK


def cmd_geom_check(args) -> int:
    f = load_or_expand(args.form, args.budget, args.cache_dir)
    frame = geom.DiscCenterFrame(_cplx(args.z_prime))
    pb = geom.DiscPullback(f, frame)
    M = sup_norm_estimate(f)
    rows = []
    for rho in args.rho:
        series = geom.B_rho(f, f, frame, rho, pullbacks=(pb, pb))
        direct = geom.B_rho_direct(f, f, frame, rho)
        bound = float(geom.B_bound(M, M, frame.y_prime, f.k, rho))
        rows.append([_num(rho), _num(np.real(series)), _num(np.real(direct)), _num(bound)])
    _write_csv(["rho", "B_series", "B_direct", "B_bound"], rows, args.out)
    return EXIT_OK


def cmd_mfun(args) -> int:
    p = special.MFunctionParams(_cplx(args.s), float(args.t), float(args.delta))
    methods = ["hypergeometric_far", "hypergeometric_near", "quadrature"] if args.method == "all" else [args.method]
    rows = []
    for m in methods:
        v = special.m_function(p, m)
        rows.append([m, _num(v.real), _num(v.imag)])
    _write_csv(["method", "re", "im"], rows, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subconvex", description="Twisted L-values of half-integral weight forms and their checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, form=True, budget=None):
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--cache-dir", dest="cache_dir", help="coefficient cache directory")
        if form:
            sp.add_argument("form", help="eta-quotient, e.g. 'eta(8z)^3'")
        if budget is not None:
            sp.add_argument("--budget", type=int, default=budget, help="number of coefficients")

    sp = sub.add_parser("scan", help="Q-sweep of max |L(1/2, f, chi)|")
    sp.add_argument("--config")
    sp.add_argument("--form")
    sp.add_argument("--q-min", dest="q_min", type=int)
    sp.add_argument("--q-max", dest="q_max", type=int)
    sp.add_argument("--primes-only", dest="primes_only", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--characters", help="'all' or 'sample:N'")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--rn-tol", dest="rn_tol", type=float)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--cache-dir", dest="cache_dir")
    sp.add_argument("--out")
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("verify", help="run an invariant suite")
    sp.add_argument("suite", choices=[*suites.SUITES, "all"])
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("coeffs", help="coefficient table a(n), n <= M")
    common(sp)
    sp.add_argument("M", type=int)
    sp.set_defaults(func=cmd_coeffs)

    sp = sub.add_parser("lvalue", help="L(s, f, chi) for primitive chi mod Q")
    common(sp, budget=1 << 15)
    sp.add_argument("--Q", type=int, default=1)
    sp.add_argument("--chi", type=int, help="character index (default: all primitive)")
    sp.add_argument("--s", default="0.5")
    sp.set_defaults(func=cmd_lvalue)

    sp = sub.add_parser("amplify", help="amplified sum against its shifted-sum bound")
    common(sp, budget=1 << 12)
    sp.add_argument("--Q", type=int, required=True)
    sp.add_argument("--chi", type=int)
    sp.add_argument("--X", type=float, default=400.0)
    sp.add_argument("--L", type=float, default=6.0)
    sp.set_defaults(func=cmd_amplify)

    sp = sub.add_parser("shifted", help="truncated Z_Q by two enumerations")
    common(sp)
    sp.add_argument("--s", default="2.5")
    sp.add_argument("--w", default="2.5")
    sp.add_argument("--Q", type=int, default=11)
    sp.add_argument("--l1", type=int, default=1)
    sp.add_argument("--l2", type=int, default=1)
    sp.add_argument("--m-max", dest="m_max", type=int, default=1500)
    sp.set_defaults(func=cmd_shifted)

    sp = sub.add_parser("selberg", help="Gaussian localizer transform tables")
    sp.add_argument("--out")
    sp.add_argument("--T", type=float, default=5.0)
    sp.add_argument("--side", choices=("h", "k"), default="h")
    sp.add_argument("--t-max", dest="t_max", type=float, default=20.0)
    sp.add_argument("--r-max", dest="r_max", type=float, default=7.0)
    sp.add_argument("--points", type=int, default=81)
    sp.add_argument("--roundtrip", action="store_true")
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_selberg)

    sp = sub.add_parser("geom-check", help="B(rho) by series and by quadrature")
    common(sp, budget=4000)
    sp.add_argument("--z-prime", dest="z_prime", default="1j")
    sp.add_argument("--rho", type=float, nargs="+", default=[0.2, 0.4, 0.6])
    sp.set_defaults(func=cmd_geom_check)

    sp = sub.add_parser("mfun", help="M(s, t, delta) by each method")
    sp.add_argument("--out")
    sp.add_argument("--s", default="2")
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--method", default="all",
                    choices=("all", "hypergeometric_far", "hypergeometric_near", "quadrature"))
    sp.set_defaults(func=cmd_mfun)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FormSpecError, special.PoleProximityError, lfunc.UnsupportedTwistError,
            geom.ConditioningError, selberg.DecayError) as exc:
        print(f"subconvex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PrecisionError, geom.QuadratureError, selberg.CutoffError) as exc:
        print(f"subconvex: precision failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == "__main__":
    sys.exit(main())
