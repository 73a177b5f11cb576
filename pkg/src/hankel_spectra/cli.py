"""Command-line experiment runner.

Usage::

    hankel-spectra spectrum --kernel log-model --alpha 1 --N 65536 --top 150 --out run/
    hankel-spectra verify --check lacunary --out run/
    hankel-spectra spectrum --config run.json

Exit status: 0 pass, 1 usage or configuration error, 2 a verification gate
failed, 3 inconclusive (nothing converged).
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import InsufficientDataError, fit_power, fit_widom, v_alpha
from .besov import besov_sum, weak_besov
from .checks import CHECKS, run_check
from .hankel_op import build_section, fft_workers
from .kernel import CONTINUOUS_CATALOG, DISCRETE_CATALOG, KernelSeq, make_kernel
from .spectra import convergence_study, dense_svd, lanczos_topk

EXIT_OK, EXIT_USAGE, EXIT_GATE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
EXPERIMENTS = ("spectrum", "besov", "weak-besov", "fit", "verify", "bench")


class ConfigError(ValueError):
    """Invalid or unknown configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    kernel: str = "log-model"
    alpha: float | None = None
    gamma: float | None = None
    params: dict = field(default_factory=dict)
    N: int | None = None
    sizes: list | None = None
    top: int = 50
    p: float | None = None
    n_max: int = 12
    window: list = field(default_factory=lambda: [30, 120])
    check: str | None = None
    out: str | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration fields: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigError("missing field 'experiment'")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed configuration: {exc}") from exc
        return cls.from_dict(data)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.experiment == "verify":
            if self.check not in CHECKS and self.check != "all":
                raise ConfigError(f"verify needs --check from {sorted(CHECKS)} or 'all'")
            return
        if self.experiment == "bench":
            return
        if self.kernel not in DISCRETE_CATALOG and self.kernel not in CONTINUOUS_CATALOG:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        for name in ("N", "top", "n_max", "seed"):
            val = getattr(self, name)
            if val is not None and (not isinstance(val, int) or isinstance(val, bool)):
                raise ConfigError(f"{name} must be an integer")
        if self.N is not None and self.N < 1:
            raise ConfigError("N must be positive")
        if self.sizes is not None and not all(isinstance(s, int) for s in self.sizes):
            raise ConfigError("sizes must be integers")
        if self.experiment in ("besov", "weak-besov") and self.p is None:
            raise ConfigError(f"{self.experiment} needs p")


def build_kernel(cfg: ExperimentConfig):
    factory = DISCRETE_CATALOG.get(cfg.kernel) or CONTINUOUS_CATALOG.get(cfg.kernel)
    accepted = inspect.signature(factory).parameters
    params = dict(cfg.params)
    for name in ("alpha", "gamma"):
        value = getattr(cfg, name)
        if value is not None:
            if name not in accepted:
                raise ConfigError(f"kernel {cfg.kernel!r} takes no parameter {name}")
            params[name] = value
    if cfg.kernel == "random" and "seed" not in params:
        params["seed"] = cfg.seed
    bad = sorted(set(params) - set(accepted))
    if bad:
        raise ConfigError(f"kernel {cfg.kernel!r} takes no parameters {bad}")
    try:
        return make_kernel(cfg.kernel, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid parameters for {cfg.kernel!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dump_json(obj, indent: int = 0) -> str:
    """JSON text with every real written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dump_json([obj.real, obj.imag], indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dump_json(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, bool, np.number, np.bool_)) or v is None for v in obj):
            return "[" + ", ".join(dump_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dump_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_table(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_float(float(v)).strip('"') if isinstance(v, (float, np.floating))
                         else (int(v) if isinstance(v, (bool, np.bool_)) else v) for v in row])
    path.write_text(buf.getvalue())


@dataclass
class Report:
    config: dict
    payload: dict
    status: str
    timings: dict
    tables: dict = field(default_factory=dict)
    version: str = __version__

    def numeric_payload(self) -> str:
        return dump_json(self.payload)

    def to_json(self) -> str:
        doc = {"tool": "hankel-spectra", "version": self.version, "status": self.status,
               "config": self.config, "payload": self.payload, "timings": self.timings}
        return dump_json(doc) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        for name, (header, rows) in self.tables.items():
            write_table(out / name, header, rows)

    @property
    def exit_code(self) -> int:
        return {"pass": EXIT_OK, "ok": EXIT_OK, "fail": EXIT_GATE,
                "inconclusive": EXIT_INCONCLUSIVE}[self.status]


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _spectrum(cfg: ExperimentConfig, kern):
    if not isinstance(kern, KernelSeq):
        raise ConfigError("spectra are computed for discrete kernels")
    if cfg.sizes:
        study = convergence_study(kern, cfg.sizes, cfg.top, seed=cfg.seed)
        return study.spectrum, {"sizes": list(study.sizes),
                                "relative_change": study.changes[-1].tolist(),
                                "extrapolated": study.extrapolated.tolist()}
    N = cfg.N or 1024
    sec = build_section(kern, N)
    top = min(cfg.top, N)
    sp = dense_svd(sec).top(top) if N <= 4096 else lanczos_topk(sec, top, seed=cfg.seed)
    return sp, {}


def _spectrum_payload(sp, extra):
    return {"N": sp.N, "method": sp.method, "s": sp.s.tolist(),
            "residuals": sp.residuals.tolist(), "converged": sp.converged.tolist(), **extra}


def run_experiment(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    start = time.perf_counter()
    tables = {}
    if cfg.experiment == "verify":
        names = sorted(CHECKS) if cfg.check == "all" else [cfg.check]
        workers = max(1, int(os.environ.get("HANKEL_SPECTRA_THREADS", "1") or 1))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_check, names))
        payload = {r.name: {"tag": r.tag, "title": r.title, "status": r.status,
                            "metrics": r.metrics, "detail": r.detail} for r in results}
        statuses = {r.status for r in results}
        status = "fail" if "fail" in statuses else (
            "inconclusive" if "inconclusive" in statuses else "pass")
        timings = {r.name: r.seconds for r in results}
        for r in results:
            print(r.line())
    elif cfg.experiment == "bench":
        payload = bench_matvec(cfg.sizes or [2 ** i for i in range(10, 21)])
        status = "pass" if payload["scaling_ok"] in (True, None) else "fail"
        timings = {}
        tables["bench.csv"] = (["N", "fast_seconds", "dense_seconds"],
                               [(r["N"], r["fast"], r["dense"] if r["dense"] is not None else "")
                                for r in payload["rows"]])
    else:
        kern = build_kernel(cfg)
        if cfg.experiment == "spectrum":
            sp, extra = _spectrum(cfg, kern)
            payload = _spectrum_payload(sp, extra)
            status = "ok" if sp.converged.any() else "inconclusive"
            tables["spectrum.csv"] = (["n", "s_n", "converged"],
                                      [(i + 1, sp.s[i], bool(sp.converged[i]))
                                       for i in range(sp.k)])
        elif cfg.experiment == "fit":
            sp, extra = _spectrum(cfg, kern)
            payload = _spectrum_payload(sp, extra)
            if kern.name == "widom":
                fit = fit_widom(sp, kern.param("gamma"))
                payload["widom_fit"] = asdict(fit)
                status = "ok" if fit.status == "ok" else "inconclusive"
            else:
                alpha = kern.param("alpha")
                try:
                    fit = fit_power(sp, tuple(cfg.window), alpha)
                    payload["power_fit"] = asdict(fit)
                    status = "ok"
                except InsufficientDataError as exc:
                    payload["power_fit"] = {"error": str(exc)}
                    status = "inconclusive"
                if alpha is not None:
                    payload["v_alpha"] = v_alpha(alpha)
            tables["spectrum.csv"] = (["n", "s_n", "converged"],
                                      [(i + 1, sp.s[i], bool(sp.converged[i]))
                                       for i in range(sp.k)])
        elif cfg.experiment == "besov":
            res = besov_sum(kern, cfg.p, cfg.n_max)
            payload = {"p": res.p, "n": res.ns.tolist(), "terms": res.terms.tolist(),
                       "partial_sums": res.partial.tolist(),
                       "growth_exponent": res.growth_exponent,
                       "last_increment": res.last_increment, "verdict": res.verdict,
                       "tail_ok": res.tail_ok}
            status = "ok"
            tables["besov.csv"] = (["n", "T_n", "partial_sum"],
                                   list(zip(res.ns.tolist(), res.terms, res.partial)))
        else:
            res = weak_besov(kern, cfg.p, cfg.n_max)
            payload = {"p": res.p, "value": res.value, "s_star": res.s_star,
                       "n_max": res.n_max, "value_previous_n_max": res.value_prev,
                       "relative_change": res.rel_change}
            status = "ok"
        timings = {}
    timings = {"total_seconds": time.perf_counter() - start, **timings}
    return Report(cfg.to_dict(), payload, status, timings, tables)


def bench_matvec(sizes, repeats: int = 5, seed: int = 0) -> dict:
    """Median-of-``repeats`` wall time of fast and dense matvec per size."""
    rng = np.random.default_rng(seed)
    rows = []
    for N in sizes:
        if N > 2 ** 22:
            raise ConfigError("fast-path benchmark sizes are capped at 2^22")
        c = rng.standard_normal(2 * N - 1)
        u = rng.standard_normal(N)
        sec = build_section(c, N)
        fast = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            sec.matvec(u)
            fast.append(time.perf_counter() - t0)
        dense = None
        if N <= 4096:
            mat = sec.to_dense()
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                mat @ u
                times.append(time.perf_counter() - t0)
            dense = float(np.median(times))
        rows.append({"N": int(N), "fast": float(np.median(fast)), "dense": dense})
    crossover = next((r["N"] for r in rows if r["dense"] is not None and r["fast"] < r["dense"]),
                     None)
    big = [r for r in rows if r["N"] >= 2 ** 14]
    exponent = None
    if len(big) >= 2:
        exponent = float(np.polyfit(np.log([r["N"] for r in big]),
                                    np.log([r["fast"] for r in big]), 1)[0])
    scaling_ok = None if exponent is None else exponent <= 1.3
    return {"sizes": [int(n) for n in sizes], "rows": rows, "crossover": crossover,
            "scaling_exponent": exponent, "scaling_ok": scaling_ok,
            "fft_workers": fft_workers()}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_INLINE = ("kernel", "alpha", "gamma", "N", "top", "p", "seed", "sizes", "n_max", "check",
           "window")


def _parser():
    parser = argparse.ArgumentParser(prog="hankel-spectra",
                                     description="Hankel operator spectra and functionals.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON configuration file")
        sp.add_argument("--kernel")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--N", type=int)
        sp.add_argument("--top", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--sizes", type=int, nargs="+")
        sp.add_argument("--n-max", dest="n_max", type=int)
        sp.add_argument("--window", type=int, nargs=2)
        sp.add_argument("--check")
        sp.add_argument("--out", help="output directory for report.json and tables")
    return parser


def config_from_args(args) -> ExperimentConfig:
    inline = {k: getattr(args, k) for k in _INLINE if getattr(args, k) is not None}
    if args.config is not None:
        if inline:
            raise ConfigError("--config cannot be combined with inline parameters")
        try:
            cfg = ExperimentConfig.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.experiment != args.experiment:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
        if args.out is not None:
            cfg.out = args.out
        return cfg
    if "window" in inline:
        inline["window"] = list(inline["window"])
    return ExperimentConfig.from_dict({"experiment": args.experiment, "out": args.out, **inline})


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = config_from_args(args)
        report = run_experiment(cfg)
    except (ConfigError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        report.write(cfg.out)
    else:
        sys.stdout.write(report.to_json())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
