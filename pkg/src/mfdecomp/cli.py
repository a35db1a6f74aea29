"""Command line interface: synth, surrogate, analyze, calibrate, decompose, report.

Every run writes its outputs atomically (temp file + rename) inside
--output-dir together with a manifest.json recording the configuration,
seed, library versions, input checksums, and any rendering warnings, so
identical manifests imply identical numeric outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile

import numpy as np
import scipy

from . import __version__
from .errors import DataError, ValidationError
from .mfdfa import MfdfaConfig, detect_crossover, fit_hq, fluctuation_surface
from .qgen import QGaussianParams, sample_asymmetric, sample_symmetric
from .series import (
    ReturnSeries,
    TimeSeries,
    log_returns,
    normalize,
    read_calendar_csv,
    read_price_csv,
    read_series_csv,
    remove_overnight,
    resample,
)
from .spectrum import legendre
from .surrogate import SurrogateSpec, fourier_filtered, shuffle
# explicit names: the package attribute `decompose` is the function, not the module
from .decompose import (
    _CALIBRATE_QTILDES,
    DecomposeConfig,
    calibrate,
    decompose as run_decompose,
    read_calibration_csv,
    read_fse_params,
)
from .svgplot import Curve, render_svg

OUTPUT_DIR_ENV = "MFDECOMP_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here is usage text + exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="mfdecomp", description="Multifractality measurement and decomposition")
    p.add_argument("--output-dir", default=os.environ.get(OUTPUT_DIR_ENV, "."),
                   help="directory for all outputs (env MFDECOMP_OUTPUT_DIR)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads for Monte-Carlo ensembles (1 = serial)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[], help="generate a q-Gaussian series")
    s.add_argument("--qtilde", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--asymmetric", action="store_true")
    s.add_argument("--out", default="synth.csv")

    s = sub.add_parser("surrogate", help="generate a comparison series")
    s.add_argument("--kind", choices=["fourier_filtered", "shuffle"], required=True)
    s.add_argument("--hurst", type=float, default=0.5)
    s.add_argument("--n", type=int)
    s.add_argument("--input", help="series CSV to shuffle (kind=shuffle)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="surrogate.csv")

    s = sub.add_parser("analyze", help="MFDFA + singularity spectrum of a series CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--q-min", type=float, default=-10.0)
    s.add_argument("--q-max", type=float, default=10.0)
    s.add_argument("--q-step", type=float, default=0.25)
    s.add_argument("--s-min", type=int, default=40)
    s.add_argument("--s-max", type=int, help="default: length/20")
    s.add_argument("--n-scales", type=int, default=40)
    s.add_argument("--detrend-order", type=int, default=2)
    s.add_argument("--crossover", action="store_true", help="also report two-piece fit breakpoints")
    s.add_argument("--out-prefix", default="mfdfa")

    s = sub.add_parser("calibrate", help="re-estimate the fat-tail tables by Monte Carlo")
    s.add_argument("--m", type=int, default=1_000_000)
    s.add_argument("--ensemble", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--qtilde", type=float, action="append",
                   help="restrict to these deformation values (repeatable)")
    s.add_argument("--tails", choices=["both", "symmetric", "asymmetric"], default="both")
    s.add_argument("--out", default="calibration.csv")

    s = sub.add_parser("decompose", help="split delta_h into FSE / fat-tail / nonlinear parts")
    s.add_argument("--input", required=True, help="timestamp,price CSV or single-column return series")
    s.add_argument("--lag", type=int, default=1, help="return interval in seconds (price input)")
    s.add_argument("--tick", type=int, help="resampling step in seconds (price input)")
    s.add_argument("--calendar", help="date,open,close session CSV")
    s.add_argument("--mode", choices=["formula", "montecarlo"], default="montecarlo")
    s.add_argument("--fse-params", help="key=value file with the FSE formula constants")
    s.add_argument("--calibration", help="CSV overriding the shipped fat-tail tables")
    s.add_argument("--ensemble", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--beta", type=float, help="skip the tail fit and use this exponent")
    s.add_argument("--tails", choices=["auto", "symmetric", "asymmetric"], default="auto")
    s.add_argument("--fse-surrogate", choices=["hurst", "spectrum"], default="hurst")
    s.add_argument("--ft-mc-length", type=int)
    s.add_argument("--allow-extrapolation", action="store_true")
    s.add_argument("--q-max", type=float, default=10.0)
    s.add_argument("--q-step", type=float, default=0.25)
    s.add_argument("--out-prefix", default="decomp")

    s = sub.add_parser("report", help="re-render an existing report.json")
    s.add_argument("--input", required=True)
    s.add_argument("--out-prefix", default="decomp")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        os.makedirs(ns.output_dir, exist_ok=True)
        handler = {
            "synth": _cmd_synth,
            "surrogate": _cmd_surrogate,
            "analyze": _cmd_analyze,
            "calibrate": _cmd_calibrate,
            "decompose": _cmd_decompose,
            "report": _cmd_report,
        }[ns.command]
        handler(ns)
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 2


# ---------------------------------------------------------------------------
# output plumbing

def _atomic_write(directory: str, name: str, text: str) -> str:
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, os.path.join(directory, name))
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return name


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(ns, inputs: list, outputs: list, warnings: dict | None = None) -> None:
    config = {k: v for k, v in vars(ns).items() if k not in ("command",)}
    manifest = {
        "tool": "mfdecomp",
        "version": __version__,
        "subcommand": ns.command,
        "config": config,
        "inputs": {path: _sha256(path) for path in inputs},
        "outputs": outputs,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "warnings": warnings or {},
    }
    _atomic_write(ns.output_dir, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _series_text(values) -> str:
    return "".join(f"{float(v)!r}\n" for v in np.asarray(values, dtype=float))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_synth(ns) -> None:
    params = QGaussianParams(ns.qtilde, asymmetric=ns.asymmetric)
    if ns.asymmetric:
        out = sample_asymmetric(params, ns.n, ns.seed)
    else:
        out = sample_symmetric(params, ns.n, ns.seed)
    name = _atomic_write(ns.output_dir, ns.out, _series_text(out.values))
    _write_manifest(ns, [], [name])


def _cmd_surrogate(ns) -> None:
    inputs = []
    if ns.kind == "shuffle":
        if not ns.input:
            raise ValidationError("kind=shuffle requires --input")
        values = read_series_csv(ns.input)
        inputs.append(ns.input)
        out = shuffle(values, ns.seed)
    else:
        if not ns.n:
            raise ValidationError("kind=fourier_filtered requires --n")
        out = fourier_filtered(SurrogateSpec("fourier_filtered", ns.n, ns.seed, target_H=ns.hurst))
    name = _atomic_write(ns.output_dir, ns.out, _series_text(out.values))
    _write_manifest(ns, inputs, [name])


def _analyze_config(ns, m: int) -> MfdfaConfig:
    steps = int(round((ns.q_max - ns.q_min) / ns.q_step))
    q = np.round(np.linspace(ns.q_min, ns.q_max, steps + 1), 12)
    s_max = ns.s_max if ns.s_max is not None else m // 20
    s = np.unique(np.geomspace(ns.s_min, max(s_max, ns.s_min + 1), ns.n_scales).round().astype(np.int64))
    return MfdfaConfig(q_grid=q, s_grid=s, detrend_order=ns.detrend_order, s_min=ns.s_min, s_max=s_max)


def _cmd_analyze(ns) -> None:
    values = read_series_csv(ns.input)
    if values.size < 2:
        raise ValidationError("input series length >= 2 is required")
    cfg = _analyze_config(ns, values.size)
    surface = fluctuation_surface(values, cfg)
    prof = fit_hq(surface)
    spec = legendre(prof)

    prefix = ns.out_prefix
    outputs = []
    lines = ["s,q,F"]
    for j, s in enumerate(surface.s_grid):
        for i, q in enumerate(surface.q_grid):
            lines.append(f"{int(s)},{float(q)!r},{float(surface.values[i, j])!r}")
    outputs.append(_atomic_write(ns.output_dir, f"{prefix}_surface.csv", "\n".join(lines) + "\n"))

    lines = ["q,h,stderr,r2"]
    for i, q in enumerate(prof.q):
        lines.append(f"{float(q)!r},{float(prof.h[i])!r},{float(prof.stderr[i])!r},{float(prof.r2[i])!r}")
    outputs.append(_atomic_write(ns.output_dir, f"{prefix}_hq.csv", "\n".join(lines) + "\n"))

    lines = ["q,tau,alpha,f"]
    for i, q in enumerate(spec.q):
        lines.append(
            f"{float(q)!r},{float(spec.tau[i])!r},{float(spec.alpha[i])!r},{float(spec.f_alpha[i])!r}"
        )
    outputs.append(_atomic_write(ns.output_dir, f"{prefix}_spectrum.csv", "\n".join(lines) + "\n"))

    warnings = {}
    svg, dropped = render_svg(
        [Curve(prof.q, prof.h, yerr=prof.stderr, marker=True)], "q", "h(q)", title="generalized Hurst exponent"
    )
    outputs.append(_atomic_write(ns.output_dir, f"{prefix}_hq.svg", svg))
    warnings["hq_dropped_points"] = dropped

    step = max(1, surface.q_grid.size // 9)
    curves = [
        Curve(surface.s_grid.astype(float), surface.values[i], label=f"q={surface.q_grid[i]:g}")
        for i in range(0, surface.q_grid.size, step)
    ]
    svg, dropped = render_svg(curves, "s", "F_q(s)", xlog=True, ylog=True, title="fluctuation functions")
    outputs.append(_atomic_write(ns.output_dir, f"{prefix}_fq.svg", svg))
    warnings["fq_dropped_points"] = dropped

    svg, dropped = render_svg(
        [Curve(spec.alpha, spec.f_alpha, marker=True)], "alpha", "f(alpha)", title="singularity spectrum"
    )
    outputs.append(_atomic_write(ns.output_dir, f"{prefix}_falpha.svg", svg))
    warnings["falpha_dropped_points"] = dropped
    if spec.folded:
        warnings["spectrum_folded"] = True

    if ns.crossover:
        sx = detect_crossover(surface)
        lines = ["q,s_x"]
        for i, q in enumerate(surface.q_grid):
            sx_txt = "" if np.isnan(sx[i]) else f"{sx[i]:g}"
            lines.append(f"{float(q)!r},{sx_txt}")
        outputs.append(_atomic_write(ns.output_dir, f"{prefix}_crossover.csv", "\n".join(lines) + "\n"))

    _write_manifest(ns, [ns.input], outputs, warnings)


def _cmd_calibrate(ns) -> None:
    q_tildes = tuple(ns.qtilde) if ns.qtilde else _CALIBRATE_QTILDES
    cal, meta = calibrate(
        ns.m, ensemble=ns.ensemble, seed=ns.seed, q_tildes=q_tildes,
        tails=ns.tails, threads=ns.threads,
    )
    text_rows = ["q_tilde,beta,c,mu,saturation_q15,symmetric"]
    for r in cal.rows:
        text_rows.append(f"{r.q_tilde!r},{r.beta!r},{r.c!r},{r.mu!r},{r.saturation_q15!r},{int(r.symmetric)}")
    name = _atomic_write(ns.output_dir, ns.out, "\n".join(text_rows) + "\n")
    _write_manifest(ns, [], [name], warnings={"calibration_meta": meta})


def _load_returns(ns) -> ReturnSeries:
    with open(ns.input, encoding="utf-8") as fh:
        first = fh.readline().strip().lower()
    if first.startswith("timestamp,"):
        prices = read_price_csv(ns.input)
        if ns.tick:
            calendar = read_calendar_csv(ns.calendar) if ns.calendar else None
            prices = resample(prices, ns.tick, calendar)
        rets = log_returns(prices, ns.lag)
        if ns.calendar:
            rets = remove_overnight(rets, read_calendar_csv(ns.calendar), ns.lag)
        return normalize(rets)
    values = read_series_csv(ns.input)
    ts = TimeSeries(values, meta={"lag": ns.lag, "label": ns.input})
    return normalize(ts)


def _cmd_decompose(ns) -> None:
    returns = _load_returns(ns)
    calibration = read_calibration_csv(ns.calibration) if ns.calibration else None
    fse_params = read_fse_params(ns.fse_params) if ns.fse_params else None
    cfg = DecomposeConfig(
        mode=ns.mode,
        fse_params=fse_params,
        calibration=calibration,
        ensemble=ns.ensemble,
        seed=ns.seed,
        ft_mc_length=ns.ft_mc_length,
        fse_surrogate=ns.fse_surrogate,
        tails=ns.tails,
        beta=ns.beta,
        allow_extrapolation=ns.allow_extrapolation,
        mfdfa=MfdfaConfig.default(
            len(returns), real_data=True, q_max=ns.q_max, q_step=ns.q_step
        ),
        threads=ns.threads,
    )
    report = dc.decompose(returns, cfg)
    inputs = [ns.input] + ([ns.calendar] if ns.calendar else []) \
        + ([ns.calibration] if ns.calibration else []) + ([ns.fse_params] if ns.fse_params else [])
    outputs, warnings = _emit_report(ns, report.to_dict())
    _write_manifest(ns, inputs, outputs, warnings)


def _cmd_report(ns) -> None:
    with open(ns.input, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != 1:
        raise ValidationError("unsupported report schema version")
    outputs, warnings = _emit_report(ns, payload, include_json=False)
    per_q = payload["per_q"]
    print(f"{'q':>6} {'delta_h':>10} {'fse':>10} {'ft':>10} {'nl':>10}")
    for row in per_q:
        print(f"{row['q']:6.2f} {row['delta_h']:10.4f} {row['delta_h_fse']:10.4f} "
              f"{row['delta_h_ft']:10.4f} {row['delta_h_nl']:10.4f}")
    _write_manifest(ns, [ns.input], outputs, warnings)


def _emit_report(ns, payload: dict, include_json: bool = True) -> tuple[list, dict]:
    prefix = ns.out_prefix
    outputs = []
    if include_json:
        outputs.append(
            _atomic_write(ns.output_dir, f"{prefix}_report.json", json.dumps(payload, indent=2) + "\n")
        )
    per_q = payload["per_q"]
    cols = [
        "q", "delta_h", "delta_h_ci", "delta_h_fse", "delta_h_fse_ci",
        "delta_h_ft", "delta_h_ft_ci", "delta_h_nl", "delta_h_nl_ci", "delta_h_nl_clipped",
    ]
    lines = [",".join(cols)]
    for row in per_q:
        lines.append(",".join(f"{float(row.get(c, 0.0))!r}" for c in cols))
    outputs.append(_atomic_write(ns.output_dir, f"{prefix}_decomposition.csv", "\n".join(lines) + "\n"))

    q = np.array([row["q"] for row in per_q])
    curves = [
        Curve(q, np.array([row["delta_h"] for row in per_q]), label="delta_h"),
        Curve(q, np.array([row["delta_h_fse"] for row in per_q]), label="FSE"),
        Curve(q, np.array([row["delta_h_ft"] for row in per_q]), label="fat tail"),
        Curve(q, np.array([row["delta_h_nl"] for row in per_q]), label="nonlinear"),
    ]
    svg, dropped = render_svg(curves, "q", "delta_h(q)", ylog=True, title="spread decomposition")
    outputs.append(_atomic_write(ns.output_dir, f"{prefix}_decomposition.svg", svg))
    return outputs, {"decomposition_dropped_points": dropped}


if __name__ == "__main__":
    sys.exit(main())
