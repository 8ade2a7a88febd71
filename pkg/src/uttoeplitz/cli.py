"""Command-line entry point.

Every command writes either CSV (comment header with config and constants,
then a column header row) or a JSON document with ``summary`` and ``rows``.
Exit status: 0 on success, 1 when a guaranteed bound is violated, 2 on bad
input.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import embed, experiments, indlimit, spectra, toeplitz
from .errors import BoundViolation, InputError, InvalidConfig, UTToeplitzError

THREADS_ENV = "UTTOEPLITZ_THREADS"
TIMESTAMP_PREFIX = "# generated:"
CONSTANTS = {"K": round(toeplitz.K_THEOREM, 15), "C": round(toeplitz.C_PAIRED, 15)}

COMMANDS = ("realize", "coeffs", "hn", "bound-sweep", "lower-bound", "embed-check",
            "indlimit", "measure", "counterexample", "explore-irrational")
TABLE_COMMANDS = {"coeffs", "hn", "bound-sweep", "lower-bound", "counterexample", "explore-irrational"}

log = logging.getLogger("uttoeplitz")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    fmt: str = "json"
    output: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidConfig(f"unknown command {self.command!r}")
        if self.fmt not in ("csv", "json"):
            raise InvalidConfig(f"unknown format {self.fmt!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")

    def as_dict(self) -> dict:
        return {"command": self.command, "seed": self.seed, "format": self.fmt, **self.params}


# --- argument helpers --------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise InvalidConfig(f"not a comma-separated list of numbers: {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise InvalidConfig(f"not a comma-separated list of integers: {text!r}") from exc


def _pairs(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.replace(" ", "").split(","):
        try:
            m, n = item.lower().split("x")
            out.append((int(m), int(n)))
        except ValueError as exc:
            raise InvalidConfig(f"pair {item!r} is not of the form MxN") from exc
    return out


def _spectrum(params: dict) -> list[float]:
    if params.get("spectrum_file"):
        lines = Path(params["spectrum_file"]).read_text().split()
        return [float(v) for v in lines]
    if params.get("spectrum"):
        return _floats(params["spectrum"])
    raise InvalidConfig("give --spectrum or --spectrum-file")


def _measure(params: dict) -> indlimit.MeasureSpec:
    if params.get("measure"):
        return indlimit.MeasureSpec.load(params["measure"])
    return indlimit.uniform_measure()


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _cplx(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


# --- commands ----------------------------------------------------------------
# Each returns (summary: dict, rows: list[dict]).


def cmd_realize(p, seed):
    lam = spectra.validate_spectrum(_spectrum(p))
    plan = spectra.greedy_rearrange(lam) if not p.get("no_rearrange") else None
    kappa = plan.apply(lam) if plan else lam
    c = toeplitz.toeplitz_coefficients(kappa)
    T = toeplitz.build_T(c)
    norm = toeplitz.operator_norm(T)
    ratio = norm / lam.sup_norm if lam.sup_norm else 0.0
    summary = {
        "n": lam.n,
        "adjustment": lam.adjustment,
        "permutation": plan.permutation.tolist() if plan else list(range(lam.n)),
        "rearranged": kappa.values.tolist(),
        "strip": [_cplx(t) for t in c.strip],
        "norm": norm,
        "sup_norm": lam.sup_norm,
        "ratio": ratio,
        "skew_norm": toeplitz.skew_norm_exact(kappa),
        "partial_sum_max": spectra.prefix_sum_max(kappa.values),
    }
    if plan and ratio > toeplitz.K_THEOREM + experiments.BOUND_ATOL:
        raise BoundViolation(f"ratio {ratio:.12g} exceeds K", {"spectrum": lam.values.tolist()})
    rows = [{"d": d, "re": t.real, "im": t.imag} for d, t in enumerate(c.strip, start=1)]
    return summary, rows


def cmd_coeffs(p, seed):
    lam = spectra.validate_spectrum(_spectrum(p))
    c = toeplitz.toeplitz_coefficients(lam)
    back = toeplitz.recover_spectrum(c)
    summary = {"n": lam.n, "roundtrip_error": float(np.max(np.abs(back.values - lam.values))),
               "symmetry_gap": c.symmetry_gap()}
    rows = [{"d": d, "re": t.real, "im": t.imag} for d, t in enumerate(c.strip, start=1)]
    return summary, rows


def cmd_hn(p, seed):
    n = int(p.get("n") or 8)
    spec = toeplitz.hn_eigensystem(n)
    summary = {"n": n, "odd": spec.odd, "eigen_residual": toeplitz.hn_eigen_residual(n),
               "reconstruction_residual": toeplitz.hn_reconstruct(n),
               "max_abs_mu": float(np.max(np.abs(spec.mu))), "mu_bound": toeplitz.MU_BOUND}
    rows = [{"k": k, "mu": float(mu)} for k, mu in enumerate(spec.mu)]
    return summary, rows


def cmd_bound_sweep(p, seed):
    sizes = _ints(p.get("sizes") or "2,4,8,16,32,64")
    trials = int(p.get("trials") or 200)
    results = experiments.bound_sweep(sizes, trials, p.get("distribution") or "uniform", seed, workers=_workers())
    summary = {"sizes": [{"n": r.n, "trials": r.trials, "worst_ratio": r.worst_ratio,
                          "worst_skew_ratio": r.worst_skew_ratio, "max_eig_error": r.max_eig_error}
                         for r in results],
               "worst_ratio": max(r.worst_ratio for r in results)}
    rows = [{"n": r.n, "trial": i, "ratio": float(x)} for r in results for i, x in enumerate(r.ratios)]
    return summary, rows


def cmd_lower_bound(p, seed):
    sizes = _ints(p.get("sizes") or "2,4,8,16,32,64,128,256,512")
    g = experiments.lowerbound_growth(sizes)
    summary = {"slope": g.slope, "monotone": g.monotone, "inverse_pi": 1 / np.pi}
    return summary, list(g.rows())


def cmd_embed_check(p, seed):
    pairs = _pairs(p.get("pairs") or "2x2,3x2,4x3,8x2")
    samples = int(p.get("samples") or 25)
    rows = []
    for m, n in pairs:
        rows.append({"m": m, "n": n,
                     "diagram_residual": embed.diagram_check((m, n), samples, seed, workers=_workers()),
                     "beta_diagonal_residual": embed.beta_diagonal_residual((m, n))})
    summary = {"max_residual": max(r["diagram_residual"] for r in rows)}
    return summary, rows


def cmd_indlimit(p, seed):
    J = int(p.get("J") or 6)
    n1 = int(p["n1"]) if p.get("n1") else None
    approx, asm = indlimit.realize_measure(_measure(p), J, n1)
    z = asm.matrix()
    norm = toeplitz.operator_norm(z)
    prof = indlimit.power_norm_profile(z, asm.N)
    summary = {
        "n1": approx.n1, "J": J, "N": asm.N,
        "norm": norm,
        "sum_stage_norms": float(asm.stage_norms.sum()),
        "budget": asm.norm_budget,
        "strictly_upper": not np.any(np.tril(z)),
        "profile_at_N": float(prof[-1]),
    }
    if norm > asm.norm_budget + experiments.BOUND_ATOL:
        raise BoundViolation(f"assembled norm {norm:.12g} exceeds budget {asm.norm_budget:.12g}", summary)
    bounds = asm.stage_bounds()
    rows = [{"stage": j + 1, "size": s, "increment_sup": float(asm.increment_sups[j]),
             "stage_norm": float(asm.stage_norms[j]), "stage_bound": float(bounds[j])}
            for j, s in enumerate(asm.plan.sizes)]
    return summary, rows


def cmd_measure(p, seed):
    J = int(p.get("J") or 4)
    n1 = int(p["n1"]) if p.get("n1") else None
    approx = indlimit.dyadic_approximation(_measure(p), J, n1)
    summary = {"n1": approx.n1, "J": J, "increment_norms": approx.increment_norms.tolist(),
               "refinement_gap": approx.refinement_gap(),
               "cuts": [[c.tolist() for c in stage] for stage in approx.cuts]}
    rows = [{"stage": j, "cell": k, "value": float(v)}
            for j, vals in enumerate(approx.stages, start=1) for k, v in enumerate(vals)]
    return summary, rows


def cmd_counterexample(p, seed):
    rows = [r._asdict() for r in indlimit.counterexample_series(int(p.get("nmax") or 100))]
    summary = {"partial_sum": rows[-1]["partial_sum"],
               "cell_average_sum": sum(r["cell_average_increment"] for r in rows)}
    return summary, rows


def cmd_explore_irrational(p, seed):
    tau = float(p.get("tau") or 2**-0.5)
    rows = experiments.irrational_explorer(tau, _ints(p.get("sizes") or "8,16,32,64"))
    return {"tau": tau, "flag": "EXPLORATORY", "worst_ratio": max(r["ratio"] for r in rows)}, rows


HANDLERS = {
    "realize": cmd_realize, "coeffs": cmd_coeffs, "hn": cmd_hn, "bound-sweep": cmd_bound_sweep,
    "lower-bound": cmd_lower_bound, "embed-check": cmd_embed_check, "indlimit": cmd_indlimit,
    "measure": cmd_measure, "counterexample": cmd_counterexample,
    "explore-irrational": cmd_explore_irrational,
}


# --- output ------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return _cplx(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def render_csv(cfg: RunConfig, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# uttoeplitz {cfg.command}\n")
    buf.write(f"# config: {json.dumps(cfg.as_dict(), sort_keys=True)}\n")
    buf.write("# constants: " + " ".join(f"{k}={v!r}" for k, v in CONSTANTS.items()) + "\n")
    buf.write(f"{TIMESTAMP_PREFIX} {_timestamp()}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (_jsonable(v) if isinstance(v, np.generic) else v) for k, v in r.items()})
    return buf.getvalue()


def render_json(cfg: RunConfig, summary: dict, rows: list[dict]) -> str:
    doc = {"command": cfg.command, "config": cfg.as_dict(), "constants": CONSTANTS,
           "generated": _timestamp(), "summary": summary, "rows": rows}
    return json.dumps(doc, indent=2, default=_jsonable) + "\n"


def _emit(cfg: RunConfig, text: str):
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    try:
        summary, rows = HANDLERS[cfg.command](cfg.params, int(cfg.seed))
    except BoundViolation as exc:
        log.debug("bound violated: %s", exc)
        sys.stderr.write(json.dumps({"error": str(exc), "instance": exc.instance}, default=_jsonable) + "\n")
        return 1
    except (InputError, ValueError, OSError) as exc:
        log.debug("input error: %s", exc)
        sys.stderr.write(f"error: {exc}\n")
        return 2
    text = render_csv(cfg, rows) if cfg.fmt == "csv" else render_json(cfg, summary, rows)
    _emit(cfg, text)
    return 0


# --- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
    common.add_argument("--output", "-o", default=None, help="output path (default stdout)")

    ap = argparse.ArgumentParser(prog="uttoeplitz", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON file with 'command' and its parameters")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    for name in ("realize", "coeffs"):
        sp = add(name, "realize a spectrum" if name == "realize" else "strip coefficients of a spectrum")
        sp.add_argument("--spectrum", help="comma-separated values")
        sp.add_argument("--spectrum-file", help="one value per line")
        if name == "realize":
            sp.add_argument("--no-rearrange", action="store_true")
    add("hn", "closed-form H_n eigensystem").add_argument("--n", type=int, default=8)
    sp = add("bound-sweep", "greedy bound over random spectra")
    sp.add_argument("--sizes", default="2,4,8,16,32,64")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--distribution", choices=experiments.DISTRIBUTIONS, default="uniform")
    add("lower-bound", "log growth of the balanced family").add_argument("--sizes", default="2,4,8,16,32,64,128,256,512")
    sp = add("embed-check", "commuting-diagram residuals")
    sp.add_argument("--pairs", default="2x2,3x2,4x3,8x2")
    sp.add_argument("--samples", type=int, default=25)
    for name in ("indlimit", "measure"):
        sp = add(name, "stage assembly for a measure" if name == "indlimit" else "dyadic approximation of a measure")
        sp.add_argument("--measure", help="measure JSON (default: uniform on [-1/2, 1/2])")
        sp.add_argument("--J", type=int, default=6 if name == "indlimit" else 4)
        sp.add_argument("--n1", type=int, default=None)
    add("counterexample", "non-summable increments example").add_argument("--nmax", type=int, default=100)
    sp = add("explore-irrational", "exploratory irrational-trace family")
    sp.add_argument("--tau", type=float, default=2**-0.5)
    sp.add_argument("--sizes", default="8,16,32,64")
    ap.command_parsers = sub.choices
    return ap


_GLOBAL_KEYS = {"command", "seed", "fmt", "output", "config", "verbose"}


def _load_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidConfig("config file must hold a JSON object")
    return doc


def parse_config(argv, parser: argparse.ArgumentParser) -> RunConfig:
    """Parse ``argv``; values from ``--config`` act as defaults that flags override."""
    argv = list(argv)
    ns = parser.parse_args(argv)
    if ns.config:
        doc = _load_config(ns.config)
        command = ns.command or doc.get("command")
        if command not in COMMANDS:
            raise InvalidConfig(f"no valid command given (got {command!r})")
        known = set(vars(parser.parse_args([command])))
        defaults = {}
        for k, v in doc.items():
            key = {"format": "fmt"}.get(k, k.replace("-", "_"))
            if key == "command":
                continue
            if key not in known or key in ("config", "verbose"):
                raise InvalidConfig(f"unknown parameter {k!r} for {command}")
            defaults[key] = ",".join(map(str, v)) if isinstance(v, list) else v
        parser.command_parsers[command].set_defaults(**defaults)
        ns = parser.parse_args(argv if ns.command else argv + [command])
    if not ns.command:
        raise InvalidConfig("no command given")
    params = {k: v for k, v in vars(ns).items() if k not in _GLOBAL_KEYS}
    fmt = ns.fmt or ("csv" if ns.command in TABLE_COMMANDS else "json")
    seed = 0 if ns.seed is None else ns.seed
    return RunConfig(ns.command, params, int(seed), fmt, ns.output)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    ap = build_parser()
    verbose = "-v" in argv or "--verbose" in argv
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv, ap)
    except (InvalidConfig, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
