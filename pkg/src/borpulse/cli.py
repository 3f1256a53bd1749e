"""Command-line runner: declarative run specs, cached sweeps, artifacts.

Subcommands
    run      <spec.json>             full pipeline, one artifact set per eps
    sweep    <spec.json>             frequency sweeps only (cache-aware)
    synth    <fsr.csv> <spec.json>   synthesis of one saved table
    echoes   <timeseries.csv>        echo report of one saved series
    mie-dump ...                     sphere oracle table as CSV
    compare  <a.csv> <b.csv>         relative-error metrics of two tables

All file writes are atomic (temp file + rename) and all outputs are
deterministic: rerunning a spec produces byte-identical artifacts.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile

import numpy as np

from .echoes import detect_echoes
from .fsr import FsrTable
from .geometry import GeometrySpec, build_profiles, mesh_profile, sphere_profile
from .mie import SphereSpec, mie_table
from .pulse import PulseSpec, truncation_fraction
from .solver import SOLVER_VERSION, sweep as run_sweep
from .synthesis import TimeSeries, synthesize

__all__ = ["main", "RunSpec"]

_PLOT_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]


class UsageError(ValueError):
    pass


class RunSpec:
    """Validated contents of a run-spec JSON document."""

    def __init__(self, payload):
        try:
            geo = dict(payload["geometry"])
            self.body = geo.pop("body", "cone")
            self.half_angle_deg = float(geo.pop("half_angle_deg", 11.5))
            self.base_radius_a = float(geo.pop("base_radius_a", 1.0))
            self.rounding_r = float(geo.pop("rounding_r", 0.32))
            self.coating_d = float(geo.pop("coating_d", 0.0))
            if geo:
                raise UsageError(f"unknown geometry fields: {sorted(geo)}")
            self.permittivities = [float(e) for e in payload["permittivities"]]
            grid = payload["kappa_grid"]
            self.kappa_grid = np.linspace(
                float(grid["min"]), float(grid["max"]), int(grid["count"])
            )
            pul = payload["pulse"]
            self.pulse = PulseSpec.from_duration(
                float(pul["c_tau_over_a"]), float(pul["kappa_max"])
            )
            self.points_per_wavelength = int(payload["points_per_wavelength"])
            tg = payload["time_grid"]
            self.time_grid = np.linspace(
                float(tg["min"]), float(tg["max"]), int(tg["count"])
            )
            self.output_dir = str(payload.get("output_dir", "out"))
            self.threshold_fraction = float(payload.get("threshold_fraction", 0.05))
            self.workers = int(payload.get("workers", 1))
        except KeyError as exc:
            raise UsageError(f"run spec is missing field {exc}") from None
        if self.body not in ("cone", "sphere"):
            raise UsageError("geometry.body must be 'cone' or 'sphere'")
        if not self.permittivities:
            raise UsageError("permittivities must be non-empty")
        if self.pulse.kappa_max > self.kappa_grid[-1] * (1 + 1e-12):
            raise UsageError(
                "pulse.kappa_max exceeds the top of the kappa grid"
            )

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read run spec {path}: {exc}") from None
        return cls(payload)

    def geometry_for(self, eps):
        coat = self.coating_d if eps > 1.0 else 0.0
        if self.body == "sphere":
            return SphereSpec(self.base_radius_a, coat, eps)
        return GeometrySpec(
            math.radians(self.half_angle_deg),
            self.base_radius_a,
            self.rounding_r,
            coat,
            eps,
        )


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _profiles_for(spec, eps):
    geo = spec.geometry_for(eps)
    if spec.body == "sphere":
        a = geo.core_radius
        pec = sphere_profile(a, center_z=a)
        coat = None
        if geo.shell_thickness > 0.0 and eps > 1.0:
            coat = sphere_profile(a + geo.shell_thickness, center_z=a)
        return pec, coat
    return build_profiles(geo)


def _cache_key(spec, eps):
    canon = {
        "body": spec.body,
        "half_angle_deg": repr(spec.half_angle_deg),
        "base_radius_a": repr(spec.base_radius_a),
        "rounding_r": repr(spec.rounding_r),
        "coating_d": repr(spec.coating_d if eps > 1.0 else 0.0),
        "eps": repr(eps),
        "kappa_grid": [repr(float(k)) for k in spec.kappa_grid],
        "ppw": spec.points_per_wavelength,
        "solver_version": SOLVER_VERSION,
    }
    blob = json.dumps(canon, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def _sweep_for(spec, eps, log):
    key = _cache_key(spec, eps)
    cache_dir = os.path.join(spec.output_dir, "cache")
    os.makedirs(cache_dir, exist_ok=True)
    cache_path = os.path.join(cache_dir, key + ".csv")
    if os.path.exists(cache_path):
        try:
            table = FsrTable.load(cache_path)
            if len(table) == len(spec.kappa_grid):
                log(f"eps={eps:g}: cache hit ({key})")
                return table
            raise ValueError("cached table length mismatch")
        except Exception as exc:  # corrupt cache: recompute
            log(f"eps={eps:g}: cache unusable ({exc}); recomputing")
    log(f"eps={eps:g}: sweeping {len(spec.kappa_grid)} frequencies")
    pec_prof, coat_prof = _profiles_for(spec, eps)
    kmax = float(spec.kappa_grid[-1])
    ri = math.sqrt(eps)
    pec_mesh = mesh_profile(
        pec_prof, kmax, spec.points_per_wavelength,
        base_radius=spec.base_radius_a, refractive_index=ri if coat_prof else 1.0,
    )
    coat_mesh = None
    if coat_prof is not None:
        coat_mesh = mesh_profile(
            coat_prof, kmax, spec.points_per_wavelength,
            base_radius=spec.base_radius_a, refractive_index=ri,
        )
    table = run_sweep(
        (pec_mesh, coat_mesh), eps, spec.kappa_grid,
        worker_count=spec.workers, base_radius=spec.base_radius_a,
        metadata={"body": spec.body, "cache_key": key},
    )
    _atomic_write(cache_path, table.to_csv())
    return table


def _fmt(x):
    return f"{x:.6g}"


def _plot_svg(series_by_eps, pulse):
    """Deterministic SVG overlay of the transient responses."""
    width, height, margin = 800, 500, 60
    t0 = min(s.t[0] for s in series_by_eps.values())
    t1 = max(s.t[-1] for s in series_by_eps.values())
    v1 = max(np.max(np.abs(s.values)) for s in series_by_eps.values())
    v1 = v1 if v1 > 0 else 1.0

    def sx(t):
        return margin + (t - t0) / (t1 - t0) * (width - 2 * margin)

    def sy(v):
        return height / 2 - v / v1 * (height / 2 - margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height / 2:g}" x2="{width - margin}" '
        f'y2="{height / 2:g}" stroke="#888"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="#888"/>',
        f'<text x="{width // 2}" y="{height - 15}" text-anchor="middle" '
        f'font-size="14">ct/2a</text>',
        f'<text x="{width // 2}" y="25" text-anchor="middle" font-size="14">'
        f"transient backscatter, c tau/a = {_fmt(pulse.c_tau_over_a)}</text>",
    ]
    for tick in np.linspace(t0, t1, 7):
        parts.append(
            f'<text x="{sx(tick):.1f}" y="{height - margin + 18}" '
            f'text-anchor="middle" font-size="11">{_fmt(tick)}</text>'
        )
    for i, (eps, series) in enumerate(sorted(series_by_eps.items())):
        color = _PLOT_COLORS[i % len(_PLOT_COLORS)]
        pts = " ".join(
            f"{sx(t):.2f},{sy(v):.2f}" for t, v in zip(series.t, series.values)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - margin - 90}" y="{margin + 18 * (i + 1)}" '
            f'font-size="13" fill="{color}">eps = {_fmt(eps)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _summary_text(reports):
    lines = ["eps  echo  ct/2a      amplitude    delay      ratio"]
    for eps in sorted(reports):
        rep = reports[eps]
        for i, echo in enumerate(rep.echoes):
            delay = _fmt(rep.delays[i - 1]) if i >= 1 else "-"
            ratio = _fmt(rep.amplitude_ratios[i - 1]) if i >= 1 else "-"
            lines.append(
                f"{eps:<4g} {echo.order_label:<5d} {echo.time:<10.4f} "
                f"{echo.amplitude:<+12.5f} {delay:<10} {ratio}"
            )
    return "\n".join(lines) + "\n"


def _tag(eps):
    return _fmt(eps).replace(".", "p")


def _cmd_sweep(args, log):
    spec = RunSpec.load(args.spec)
    if args.output_dir:
        spec.output_dir = args.output_dir
    os.makedirs(spec.output_dir, exist_ok=True)
    for eps in spec.permittivities:
        table = _sweep_for(spec, eps, log)
        path = os.path.join(spec.output_dir, f"fsr_eps{_tag(eps)}.csv")
        _atomic_write(path, table.to_csv())
        log(f"wrote {path}")
    return 0


def _cmd_run(args, log):
    spec = RunSpec.load(args.spec)
    if args.output_dir:
        spec.output_dir = args.output_dir
    os.makedirs(spec.output_dir, exist_ok=True)
    log(
        "pulse truncation fraction: "
        + _fmt(truncation_fraction(spec.pulse))
    )
    series_by_eps, reports = {}, {}
    for eps in spec.permittivities:
        table = _sweep_for(spec, eps, log)
        _atomic_write(
            os.path.join(spec.output_dir, f"fsr_eps{_tag(eps)}.csv"),
            table.to_csv(),
        )
        series = synthesize(table, spec.pulse, spec.time_grid)
        _atomic_write(
            os.path.join(spec.output_dir, f"timeseries_eps{_tag(eps)}.csv"),
            series.to_csv(),
        )
        report = detect_echoes(series, spec.threshold_fraction)
        _atomic_write(
            os.path.join(spec.output_dir, f"echoes_eps{_tag(eps)}.json"),
            report.to_json() + "\n",
        )
        series_by_eps[eps] = series
        reports[eps] = report
    _atomic_write(
        os.path.join(spec.output_dir, "transients.svg"),
        _plot_svg(series_by_eps, spec.pulse),
    )
    summary = _summary_text(reports)
    _atomic_write(os.path.join(spec.output_dir, "summary.txt"), summary)
    log(summary.rstrip())
    if spec.body == "sphere":
        _mie_check(spec, log)
    return 0


def _mie_check(spec, log):
    """Sphere runs also emit a Mie-vs-solver error table."""
    rows = ["eps,kappa,rel_error"]
    worst = 0.0
    for eps in spec.permittivities:
        table = FsrTable.load(
            os.path.join(spec.output_dir, f"fsr_eps{_tag(eps)}.csv")
        )
        geo = spec.geometry_for(eps)
        ref = mie_table(table.kappa, geo if eps > 1.0 else None)
        center = getattr(geo, "core_radius", spec.base_radius_a)
        ref = ref * np.exp(-2j * table.kappa * center / spec.base_radius_a)
        rel = np.abs(table.e_complex - ref) / np.abs(ref)
        worst = max(worst, float(np.max(rel)))
        rows.extend(
            f"{_fmt(eps)},{_fmt(k)},{r:.6e}" for k, r in zip(table.kappa, rel)
        )
    path = os.path.join(spec.output_dir, "mie_vs_solver.csv")
    _atomic_write(path, "\n".join(rows) + "\n")
    log(f"mie-vs-solver max relative error: {worst:.3e} ({path})")


def _cmd_synth(args, log):
    table = FsrTable.load(args.fsr)
    spec = RunSpec.load(args.spec)
    series = synthesize(table, spec.pulse, spec.time_grid)
    out = args.output or "timeseries.csv"
    _atomic_write(out, series.to_csv())
    log(f"wrote {out}")
    return 0


def _cmd_echoes(args, log):
    series = TimeSeries.load(args.timeseries)
    report = detect_echoes(series, args.threshold)
    text = report.to_json()
    if args.output:
        _atomic_write(args.output, text + "\n")
        log(f"wrote {args.output}")
    else:
        print(text)
    return 0


def _cmd_mie_dump(args, log):
    grid = np.linspace(args.kappa_min, args.kappa_max, args.count)
    spec = None
    if args.thickness > 0.0 and args.eps > 1.0:
        spec = SphereSpec(1.0, args.thickness, args.eps)
    # shift the series' center-referenced phase to z = 0 at the front pole
    values = mie_table(grid, spec) * np.exp(-2j * grid * args.center_z)
    table = FsrTable(
        grid, values,
        {
            "body": "sphere (series oracle)",
            "eps": repr(float(args.eps)),
            "shell_thickness": repr(float(args.thickness)),
            "center_z": repr(float(args.center_z)),
        },
    )
    if args.output:
        _atomic_write(args.output, table.to_csv())
        log(f"wrote {args.output}")
    else:
        print(table.to_csv(), end="")
    return 0


def _cmd_compare(args, log):
    a = FsrTable.load(args.table_a)
    b = FsrTable.load(args.table_b)
    lo = max(a.kappa[0], b.kappa[0])
    hi = min(a.kappa[-1], b.kappa[-1])
    if lo >= hi:
        raise UsageError("tables cover disjoint kappa ranges")
    on = (a.kappa >= lo) & (a.kappa <= hi)
    grid = a.kappa[on]
    ea = a.e_complex[on]
    eb = np.interp(grid, b.kappa, b.e_complex.real) \
        + 1j * np.interp(grid, b.kappa, b.e_complex.imag)
    rel = np.abs(ea - eb) / np.maximum(np.abs(ea), 1e-300)
    mismatch = (
        a.metadata.get("geometry_hash") != b.metadata.get("geometry_hash")
    )
    result = {
        "kappa_min": lo,
        "kappa_max": hi,
        "points": int(grid.size),
        "max_rel_error": float(np.max(rel)),
        "mean_rel_error": float(np.mean(rel)),
        "geometry_hash_mismatch": bool(mismatch),
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="borpulse",
        description="transient backscatter workbench for coated rounded cones",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline from a run-spec JSON")
    p.add_argument("spec")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="frequency sweeps only")
    p.add_argument("spec")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="synthesize a saved frequency table")
    p.add_argument("fsr")
    p.add_argument("spec")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("echoes", help="echo report of a saved time series")
    p.add_argument("timeseries")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_echoes)

    p = sub.add_parser("mie-dump", help="sphere series oracle as CSV")
    p.add_argument("--kappa-min", type=float, default=0.05)
    p.add_argument("--kappa-max", type=float, default=2.25)
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--thickness", type=float, default=0.0)
    p.add_argument("--center-z", type=float, default=1.0,
                   help="sphere center position used as the phase reference")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_mie_dump)

    p = sub.add_parser("compare", help="relative error between two tables")
    p.add_argument("table_a")
    p.add_argument("table_b")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    def log(message):
        print(message, file=sys.stderr)

    try:
        return args.func(args, log)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
