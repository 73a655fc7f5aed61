"""Experiment runner: JSON config in, CSV table and JSON verdict out.

One config describes one experiment over a sweep of section sizes.  Outputs
are bit-stable: fixed 17-significant-digit decimal formatting, LF line
endings, and no randomness anywhere in the pipeline, so identical configs
produce byte-identical artifacts.

Exit codes: 0 ok, 1 numeric failure, 2 config failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .almostperiodic import (
    check_approximation_bounds,
    convergent_error_bound,
    distinguished_sequence,
    expand_cf,
)
from .operators import (
    AlmostMathieuParams,
    CompositeOperator,
    almost_mathieu,
    as_band_operator,
    band_ap_section,
    operator_from_json,
    toeplitz_section,
)
from .symbols import TrigPolynomial, geometric_mean, sample_circle, strong_szego_constant, symbol_from_json, _default_grid
from .szego import (
    ReportRow,
    SzegoReport,
    TestFunction,
    cluster_partial_limits,
    det_ratio_sequence,
    eigen_mean,
    eigen_sample,
    folner_discrepancy,
    limit_prediction,
    singular_mean,
    singular_sample,
    stability_probe,
    strong_szego_ratio,
)

EXPERIMENTS = (
    "szego-ratio",
    "strong-szego",
    "eigen-dist",
    "singular-dist",
    "mathieu-dist",
    "cf-expand",
    "folner",
    "stability",
)

CSV_HEADER = "n,empirical_re,empirical_im,predicted_re,predicted_im,residual,flags"

CF_CSV_HEADER = "n,b_n,p_n,q_n,error_bound"


class ConfigError(ValueError):
    """Config validation failure; the message names the offending field."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_report(reports, path) -> None:
    """Write reports as one CSV file: header plus one line per row.

    Bit-stable output; I/O errors propagate untouched.
    """
    if not reports:
        raise ValueError("emit_report requires at least one report")
    lines = [CSV_HEADER]
    for rep in reports:
        for r in rep.rows:
            e = complex(r.empirical)
            p = complex(r.predicted)
            lines.append(
                f"{r.n},{_fmt(e.real)},{_fmt(e.imag)},{_fmt(p.real)},"
                f"{_fmt(p.imag)},{_fmt(r.residual)},{r.flags}"
            )
    data = "\n".join(lines) + "\n"
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(data)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2))
        fh.write("\n")


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# config parsing


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    output: str
    tolerance: float
    sizes: tuple[int, ...]
    symbol: TrigPolynomial | None = None
    operator: object | None = None
    g: TestFunction | None = None
    alpha: float | None = None
    max_terms: int = 32
    q_cap: int = 10**6
    predicted_override: complex | None = None
    prediction_m: int | None = None
    prediction_window: int | None = None
    sequence_source: str | None = None


def _require(raw, field, path=""):
    if field not in raw:
        raise ConfigError(f"{path}{field}: missing required field")
    return raw[field]


def _parse_g(obj, path="g") -> TestFunction:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: must be an object")
    kind = obj.get("kind")
    domain = None
    if "domain" in obj:
        d = obj["domain"]
        if d.get("kind") == "interval":
            domain = ("interval", float(d["lo"]), float(d["hi"]))
        elif d.get("kind") == "disk":
            domain = ("disk", float(d["radius"]))
        else:
            raise ConfigError(f"{path}.domain.kind: must be 'interval' or 'disk'")
    if kind == "poly":
        coeffs = obj.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError(f"{path}.coeffs: must be a nonempty list")
        return TestFunction.polynomial([float(c) for c in coeffs], domain=domain)
    if kind == "power":
        k = obj.get("k")
        if not isinstance(k, int) or k < 0:
            raise ConfigError(f"{path}.k: must be a non-negative integer")
        return TestFunction.power(k)
    if kind == "named":
        name = obj.get("name")
        if name == "identity":
            return TestFunction.identity()
        if name == "exp":
            return TestFunction.exp()
        if name == "log":
            return TestFunction.log()
        raise ConfigError(f"{path}.name: unknown function {name!r}")
    raise ConfigError(f"{path}.kind: must be 'poly', 'power' or 'named'")


def _parse_sizes(raw, alpha_hint=None) -> tuple[tuple[int, ...], str | None]:
    """Resolve the sweep grid: a distinguished sequence wins over n_range."""
    if "distinguished" in raw:
        block = raw["distinguished"]
        if not isinstance(block, dict):
            raise ConfigError("distinguished: must be an object")
        length = block.get("length")
        if not isinstance(length, int) or length < 1:
            raise ConfigError("distinguished.length: must be a positive integer")
        if "rational" in block:
            p, q = block["rational"]
            seq = distinguished_sequence(Fraction(int(p), int(q)), length)
        else:
            alpha = block.get("alpha", alpha_hint)
            if alpha is None:
                raise ConfigError("distinguished.alpha: missing (no operator alpha to fall back on)")
            seq = distinguished_sequence(float(alpha), length)
        return seq.values, seq.source
    if "n_range" not in raw:
        raise ConfigError("n_range: missing required field")
    block = raw["n_range"]
    if isinstance(block, dict):
        if block.get("kind", "geometric") != "geometric":
            raise ConfigError("n_range.kind: only 'geometric' is supported")
        start = block.get("start")
        stop = block.get("stop")
        factor = block.get("factor", 2)
        if not isinstance(start, int) or start < 1:
            raise ConfigError("n_range.start: must be a positive integer")
        if not isinstance(stop, int) or stop < start:
            raise ConfigError("n_range.stop: must be an integer >= start")
        if not isinstance(factor, int) or factor < 2:
            raise ConfigError("n_range.factor: must be an integer >= 2")
        sizes = []
        n = start
        while n <= stop:
            sizes.append(n)
            n *= factor
        return tuple(sizes), None
    if not isinstance(block, list) or not block:
        raise ConfigError("n_range: must be a list or a geometric range object")
    sizes = []
    for i, n in enumerate(block):
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"n_range[{i}]: must be a positive integer")
        sizes.append(n)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("n_range: must be strictly increasing")
    return tuple(sizes), None


def _parse_operator(raw, path="operator"):
    obj = _require(raw, "operator")
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: must be an object")
    try:
        return operator_from_json(obj)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def validate_config(raw) -> ExperimentConfig:
    """Check and normalize a raw config mapping; raises ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("config: must be a JSON object")
    kind = _require(raw, "experiment")
    if kind not in EXPERIMENTS:
        raise ConfigError(
            f"experiment: unknown kind {kind!r}; see `szegolab list-experiments`"
        )
    output = _require(raw, "output")
    if not isinstance(output, str) or not output:
        raise ConfigError("output: must be a nonempty path prefix")
    tolerance = raw.get("tolerance", 1e-6)
    if not isinstance(tolerance, (int, float)) or tolerance <= 0:
        raise ConfigError("tolerance: must be a positive number")

    symbol = None
    operator = None
    g = None
    alpha = None
    sizes: tuple[int, ...] = ()
    source = None
    predicted_override = None
    prediction_m = None
    prediction_window = None
    max_terms = 32
    q_cap = 10**6

    if "predicted" in raw:
        val = raw["predicted"]
        if isinstance(val, (int, float)):
            predicted_override = complex(val)
        elif isinstance(val, list) and len(val) == 2:
            predicted_override = complex(val[0], val[1])
        else:
            raise ConfigError("predicted: must be a number or an [re, im] pair")
    if "prediction" in raw:
        block = raw["prediction"]
        if not isinstance(block, dict):
            raise ConfigError("prediction: must be an object")
        prediction_m = block.get("m")
        prediction_window = block.get("window")
        if prediction_m is not None and (not isinstance(prediction_m, int) or prediction_m < 1):
            raise ConfigError("prediction.m: must be a positive integer")
        if prediction_window is not None and (
            not isinstance(prediction_window, int) or prediction_window < 1
        ):
            raise ConfigError("prediction.window: must be a positive integer")

    if kind in ("szego-ratio", "strong-szego", "singular-dist"):
        symbol = symbol_from_json(_require(raw, "symbol"))
        if not symbol.coeffs:
            raise ConfigError("symbol: must have at least one nonzero coefficient")
        sizes, source = _parse_sizes(raw)
    if kind == "singular-dist":
        g = _parse_g(_require(raw, "g"))
    if kind == "eigen-dist":
        operator = _parse_operator(raw)
        if isinstance(operator, CompositeOperator):
            raise ConfigError("operator: eigen-dist needs a sectionable operator, not a composite")
        g = _parse_g(_require(raw, "g"))
        sizes, source = _parse_sizes(raw)
    if kind == "mathieu-dist":
        alpha_v = _require(raw, "alpha")
        lam = _require(raw, "lambda")
        theta = raw.get("theta", 0.0)
        for name, v in (("alpha", alpha_v), ("lambda", lam), ("theta", theta)):
            if not isinstance(v, (int, float)):
                raise ConfigError(f"{name}: must be a number")
        operator = AlmostMathieuParams(float(alpha_v), float(lam), float(theta))
        g = _parse_g(_require(raw, "g"))
        sizes, source = _parse_sizes(raw, alpha_hint=float(alpha_v))
    if kind == "cf-expand":
        alpha = _require(raw, "alpha")
        if not isinstance(alpha, (int, float)) or not 0.0 < alpha < 1.0:
            raise ConfigError("alpha: must lie strictly between 0 and 1")
        max_terms = raw.get("max_terms", 32)
        q_cap = raw.get("q_cap", 10**6)
        if not isinstance(max_terms, int) or max_terms < 1:
            raise ConfigError("max_terms: must be a positive integer")
        if not isinstance(q_cap, int) or q_cap < 1:
            raise ConfigError("q_cap: must be a positive integer")
        sizes = (1,)  # unused; CSV rows come from the expansion itself
    if kind == "folner":
        operator = _parse_operator(raw)
        if not isinstance(operator, CompositeOperator):
            raise ConfigError("operator: folner needs a composite operator")
        sizes, source = _parse_sizes(raw)
    if kind == "stability":
        operator = _parse_operator(raw)
        if isinstance(operator, CompositeOperator):
            raise ConfigError("operator: stability needs a sectionable operator, not a composite")
        sizes, source = _parse_sizes(raw)

    return ExperimentConfig(
        kind=kind,
        output=output,
        tolerance=float(tolerance),
        sizes=sizes,
        symbol=symbol,
        operator=operator,
        g=g,
        alpha=float(alpha) if alpha is not None else None,
        max_terms=max_terms,
        q_cap=q_cap,
        predicted_override=predicted_override,
        prediction_m=prediction_m,
        prediction_window=prediction_window,
        sequence_source=source,
    )


# ---------------------------------------------------------------------------
# experiment execution


def _annotate(exc: Exception, n: int):
    exc.args = (f"n={n}: {exc}",)
    return exc


def _run_szego_ratio(cfg: ExperimentConfig):
    predicted = geometric_mean(cfg.symbol)
    report = det_ratio_sequence(
        lambda n: toeplitz_section(cfg.symbol, n), cfg.sizes, predicted
    )
    clusters = cluster_partial_limits(report.empirical_values())
    summary = {
        "clusters": [
            {"center": _pair(c.center), "radius": c.radius, "count": c.count}
            for c in clusters
        ],
        "skipped": [list(s) for s in report.skipped],
    }
    return report, summary


def _run_strong_szego(cfg: ExperimentConfig):
    report = strong_szego_ratio(cfg.symbol, cfg.sizes)
    grid = _default_grid(cfg.symbol.bandwidth)
    constant = strong_szego_constant(cfg.symbol, grid // 4)
    summary = {
        "geometric_mean": _pair(geometric_mean(cfg.symbol)),
        "tail_bound": constant.tail_bound,
    }
    return report, summary


def _distribution_report(band, g, sizes, predicted) -> SzegoReport:
    rows = []
    for n in sizes:
        try:
            sample = eigen_sample(band_ap_section(band, "P", n))
            emp = eigen_mean(sample, g)
        except Exception as exc:  # carry the failing size with the error
            raise _annotate(exc, n)
        rows.append(ReportRow(n, emp, predicted, abs(emp - predicted)))
    return SzegoReport(tuple(rows), predicted, rows[-1].empirical)


def _resolve_prediction(cfg: ExperimentConfig, band) -> complex:
    if cfg.predicted_override is not None:
        return cfg.predicted_override
    if isinstance(cfg.operator, TrigPolynomial):
        return limit_prediction(
            cfg.operator, cfg.g, "toeplitz-symbol", 0, cfg.prediction_window or 4096
        )
    m = cfg.prediction_m or 4 * max(cfg.sizes)
    return limit_prediction(band, cfg.g, "diagonal-of-g", m, cfg.prediction_window)


def _run_eigen_dist(cfg: ExperimentConfig):
    band = as_band_operator(cfg.operator)
    predicted = _resolve_prediction(cfg, band)
    report = _distribution_report(band, cfg.g, cfg.sizes, predicted)
    return report, {}


def _run_mathieu_dist(cfg: ExperimentConfig):
    band = almost_mathieu(cfg.operator)
    predicted = _resolve_prediction(cfg, band)
    report = _distribution_report(band, cfg.g, cfg.sizes, predicted)
    summary = {"sequence_source": cfg.sequence_source}
    return report, summary


def _run_singular_dist(cfg: ExperimentConfig):
    moduli = np.abs(sample_circle(cfg.symbol, 4096))
    predicted = complex(np.mean(cfg.g.apply(moduli)))
    rows = []
    for n in cfg.sizes:
        try:
            sample = singular_sample(toeplitz_section(cfg.symbol, n))
            emp = complex(singular_mean(sample, cfg.g))
        except Exception as exc:
            raise _annotate(exc, n)
        rows.append(ReportRow(n, emp, predicted, abs(emp - predicted)))
    report = SzegoReport(tuple(rows), predicted, rows[-1].empirical)
    return report, {}


def _run_folner(cfg: ExperimentConfig):
    rows = []
    for n in cfg.sizes:
        try:
            d = folner_discrepancy(cfg.operator, n)
        except Exception as exc:
            raise _annotate(exc, n)
        rows.append(ReportRow(n, complex(d), 0j, d))
    report = SzegoReport(tuple(rows), 0j, rows[-1].empirical)
    return report, {}


def _run_stability(cfg: ExperimentConfig):
    probe = stability_probe(cfg.operator, cfg.sizes)
    rows = []
    for r in probe.rows:
        value = min(r.sigma_min_section, r.sigma_min_flip)
        flags = "section" if r.sigma_min_section <= r.sigma_min_flip else "flip"
        shortfall = max(0.0, probe.margin - value)
        rows.append(ReportRow(r.n, complex(value), complex(probe.margin), shortfall, flags))
    report = SzegoReport(tuple(rows), complex(probe.margin), rows[-1].empirical)
    summary = {
        "verdict": probe.verdict,
        "margin": probe.margin,
        "norm_scale": probe.norm_scale,
    }
    return report, summary


def _run_cf_expand(cfg: ExperimentConfig, csv_path, json_path) -> int:
    cf = expand_cf(cfg.alpha, cfg.max_terms, cfg.q_cap)
    lines = [CF_CSV_HEADER]
    for i, (b, (p, q)) in enumerate(zip(cf.quotients, cf.convergents)):
        bound = convergent_error_bound(cf, i)
        lines.append(f"{i + 1},{b},{p},{q},{_fmt(bound)}")
    with open(csv_path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    bounds_ok = check_approximation_bounds(cf)
    if cf.convergents:
        p, q = cf.convergents[-1]
        final_residual = abs(cf.alpha - p / q)
    else:
        final_residual = math.nan
    verdict = "pass" if bounds_ok else "fail"
    _write_json(
        json_path,
        {
            "experiment": cfg.kind,
            "predicted": [cfg.alpha, 0.0],
            "final_residual": final_residual,
            "verdict": verdict,
            "terminated": cf.terminated,
            "quotients": list(cf.quotients),
        },
    )
    return 0 if verdict == "pass" else 1


_RUNNERS = {
    "szego-ratio": _run_szego_ratio,
    "strong-szego": _run_strong_szego,
    "eigen-dist": _run_eigen_dist,
    "mathieu-dist": _run_mathieu_dist,
    "singular-dist": _run_singular_dist,
    "folner": _run_folner,
    "stability": _run_stability,
}


def run_experiment(cfg) -> int:
    """Execute a validated config; writes <output>.csv and <output>.json.

    Returns 0 on a passing verdict, 1 on a failed one.
    """
    if not isinstance(cfg, ExperimentConfig):
        cfg = validate_config(cfg)
    prefix = Path(cfg.output)
    if prefix.parent != Path(""):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_name(prefix.name + ".csv")
    json_path = prefix.with_name(prefix.name + ".json")
    if cfg.kind == "cf-expand":
        return _run_cf_expand(cfg, csv_path, json_path)
    report, extras = _RUNNERS[cfg.kind](cfg)
    emit_report([report], csv_path)
    if cfg.kind == "stability":
        verdict = extras["verdict"]
        status = 0
    else:
        verdict = "pass" if report.final_residual <= cfg.tolerance else "fail"
        status = 0 if verdict == "pass" else 1
    summary = {
        "experiment": cfg.kind,
        "predicted": _pair(report.predicted),
        "final_residual": report.final_residual,
        "verdict": verdict,
    }
    summary.update(extras)
    _write_json(json_path, summary)
    return status


# ---------------------------------------------------------------------------
# entry point


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="szegolab",
        description="Finite-section determinant and distribution experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_val = sub.add_parser("validate", help="validate a config without running it")
    p_val.add_argument("config", help="path to a JSON experiment config")
    sub.add_parser("list-experiments", help="list available experiment kinds")
    args = parser.parse_args(argv)

    if args.command == "list-experiments":
        for kind in EXPERIMENTS:
            print(kind)
        return 0
    try:
        raw = _load_config(args.config)
        cfg = validate_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print("ok")
        return 0
    try:
        return run_experiment(cfg)
    except Exception as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
