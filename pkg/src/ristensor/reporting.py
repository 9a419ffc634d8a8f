"""Plan-file parsing and result emission (CSV, JSON, plot data, figures).

The plan file is YAML with the table-column names for the grid axes::

    snr_db: [0, 10, 20, 30]   # scalar or list
    r_b: 0.5
    N: 8                      # RIS elements
    M: 4                      # tx antennas
    L: 4                      # rx antennas
    K: 8                      # blocks per frame; omit to use K = N
    P: 5                      # frames
    omega: 200
    methods: [hosvd-sti, bals, clairvoyant]
    impairment_mode: full
    redraw_per_frame: true
    master_seed: 0
    bals_max_iters: 200
    bals_tol: 1.0e-6

Every key is optional; omitted keys take the defaults above. NMSE spans
many orders of magnitude across noiseless and noisy runs, so all floats in
delimited outputs are written in scientific notation with 10 significant
digits.
"""

import json
import math
from pathlib import Path

import yaml

from .exceptions import PlanValidationError
from .harness import AggregateRecord, ExperimentPlan

__all__ = [
    "CSV_HEADER",
    "parse_plan",
    "plan_from_mapping",
    "emit_results",
]

CSV_HEADER = (
    "method,snr_db,r_b,N,M,L,K,P,omega,"
    "nmse_H_mean,nmse_H_stderr,nmse_G_mean,nmse_G_stderr,"
    "nmse_E_mean,nmse_E_stderr,runtime_s_mean,excluded_columns"
)

_GRID_KEYS = {
    "snr_db": "snr_db",
    "r_b": "r_b",
    "N": "ris_elements",
    "M": "tx_antennas",
    "L": "rx_antennas",
    "K": "blocks_per_frame",
    "P": "frames",
}
_SCALAR_KEYS = {
    "omega": int,
    "impairment_mode": str,
    "redraw_per_frame": bool,
    "master_seed": int,
    "bals_max_iters": int,
    "bals_tol": float,
}


def _as_tuple(key, value, cast):
    items = value if isinstance(value, (list, tuple)) else [value]
    try:
        return tuple(cast(v) for v in items)
    except (TypeError, ValueError) as exc:
        raise PlanValidationError(f"plan key {key!r}: {exc}") from None


def plan_from_mapping(mapping: dict) -> ExperimentPlan:
    """Build a validated plan from a parsed plan-file mapping."""
    if not isinstance(mapping, dict):
        raise PlanValidationError("plan file must contain a key/value mapping")
    unknown = set(mapping) - set(_GRID_KEYS) - set(_SCALAR_KEYS) - {"methods"}
    if unknown:
        raise PlanValidationError(
            f"unknown plan keys {sorted(unknown)}; valid keys are "
            f"{sorted([*_GRID_KEYS, 'methods', *_SCALAR_KEYS])}"
        )
    kwargs = {}
    for key, attr in _GRID_KEYS.items():
        if key not in mapping:
            continue
        cast = float if key in ("snr_db", "r_b") else int
        kwargs[attr] = _as_tuple(key, mapping[key], cast)
    if "methods" in mapping:
        kwargs["methods"] = _as_tuple("methods", mapping["methods"], str)
    for key, cast in _SCALAR_KEYS.items():
        if key in mapping:
            try:
                kwargs[key] = cast(mapping[key])
            except (TypeError, ValueError) as exc:
                raise PlanValidationError(f"plan key {key!r}: {exc}") from None
    try:
        return ExperimentPlan(**kwargs)
    except PlanValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise PlanValidationError(str(exc)) from None


def parse_plan(path) -> ExperimentPlan:
    """Parse and validate a YAML plan file, filling defaults."""
    path = Path(path)
    if not path.exists():
        raise PlanValidationError(f"plan file {path} does not exist")
    try:
        mapping = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise PlanValidationError(f"plan file {path} is not valid YAML: {exc}") from None
    if mapping is None:
        mapping = {}
    return plan_from_mapping(mapping)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".9e")
    return str(x)


def _sorted_aggregates(aggregates):
    return sorted(
        aggregates,
        key=lambda a: (a.method, a.point.r_b, a.point.snr_db, a.point.N,
                       a.point.M, a.point.L, a.point.K, a.point.P),
    )


def _csv_row(agg: AggregateRecord) -> str:
    p = agg.point
    fields = [
        agg.method, _fmt(p.snr_db), _fmt(p.r_b), p.N, p.M, p.L, p.K, p.P,
        agg.omega, _fmt(agg.nmse_h_mean), _fmt(agg.nmse_h_stderr),
        _fmt(agg.nmse_g_mean), _fmt(agg.nmse_g_stderr),
        _fmt(agg.nmse_e_mean), _fmt(agg.nmse_e_stderr),
        _fmt(agg.runtime_s_mean), agg.excluded_columns,
    ]
    return ",".join(str(f) if not isinstance(f, str) else f for f in fields)


def _write_csv(aggregates, path: Path) -> None:
    lines = [CSV_HEADER] + [_csv_row(a) for a in _sorted_aggregates(aggregates)]
    path.write_text("\n".join(lines) + "\n")


def _agg_to_dict(agg: AggregateRecord) -> dict:
    p = agg.point
    return {
        "method": agg.method,
        "snr_db": p.snr_db, "r_b": p.r_b,
        "N": p.N, "M": p.M, "L": p.L, "K": p.K, "P": p.P,
        "omega": agg.omega,
        "nmse_H_mean": agg.nmse_h_mean, "nmse_H_stderr": agg.nmse_h_stderr,
        "nmse_G_mean": agg.nmse_g_mean, "nmse_G_stderr": agg.nmse_g_stderr,
        "nmse_E_mean": agg.nmse_e_mean, "nmse_E_stderr": agg.nmse_e_stderr,
        "runtime_s_mean": agg.runtime_s_mean,
        "excluded_columns": agg.excluded_columns,
        "failed_runs": agg.failed_runs,
    }


def _write_json(aggregates, manifest: dict, path: Path) -> None:
    payload = {
        "manifest": manifest,
        "aggregates": [_agg_to_dict(a) for a in _sorted_aggregates(aggregates)],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


_FACTORS = {"H": "nmse_h_mean", "G": "nmse_g_mean", "E": "nmse_e_mean"}


def _db(x: float) -> float:
    if math.isnan(x) or x <= 0.0:
        return math.nan
    return 10.0 * math.log10(x)


def _size_tag(point) -> str:
    return f"N{point.N}_M{point.M}_L{point.L}_K{point.K}_P{point.P}"


def _write_plot_data(aggregates, outdir: Path, manifest: dict) -> list:
    """One file per (factor, r_b[, size]) with NMSE vs SNR series per method."""
    sizes = sorted({_size_tag(a.point) for a in aggregates})
    methods = sorted({a.method for a in aggregates})
    header_comment = "# " + json.dumps(manifest, sort_keys=True)
    written = []
    for size in sizes:
        in_size = [a for a in aggregates if _size_tag(a.point) == size]
        for rb in sorted({a.point.r_b for a in in_size}):
            in_rb = [a for a in in_size if a.point.r_b == rb]
            snrs = sorted({a.point.snr_db for a in in_rb})
            lookup = {(a.point.snr_db, a.method): a for a in in_rb}
            for factor, attr in _FACTORS.items():
                suffix = f"_{size}" if len(sizes) > 1 else ""
                path = outdir / f"nmse_{factor}_rb{rb:g}{suffix}.csv"
                cols = ["snr_db"]
                for m in methods:
                    cols += [f"{m}_nmse", f"{m}_nmse_db"]
                lines = [header_comment, ",".join(cols)]
                for snr in snrs:
                    row = [_fmt(float(snr))]
                    for m in methods:
                        agg = lookup.get((snr, m))
                        value = getattr(agg, attr) if agg is not None else math.nan
                        row += [_fmt(float(value)), _fmt(_db(value))]
                    lines.append(",".join(row))
                path.write_text("\n".join(lines) + "\n")
                written.append(path)
    return written


def _render_figures(aggregates, outdir: Path, manifest: dict) -> list:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    metadata = {"Description": json.dumps(manifest, sort_keys=True)}
    sizes = sorted({_size_tag(a.point) for a in aggregates})
    written = []

    def series_label(method, rb, size):
        label = f"{method}, r_b={rb:g}"
        if len(sizes) > 1:
            label += f", {size.replace('_', ' ')}"
        return label

    for factor, attr in _FACTORS.items():
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        plotted = False
        for size in sizes:
            for rb in sorted({a.point.r_b for a in aggregates}):
                series = sorted(
                    (a for a in aggregates
                     if a.point.r_b == rb and _size_tag(a.point) == size),
                    key=lambda a: a.point.snr_db,
                )
                for method in sorted({a.method for a in series}):
                    pts = [(a.point.snr_db, _db(getattr(a, attr)))
                           for a in series if a.method == method]
                    xs = [x for x, y in pts if not math.isnan(y)]
                    ys = [y for _, y in pts if not math.isnan(y)]
                    if not xs:
                        continue
                    ax.plot(xs, ys, marker="o",
                            label=series_label(method, rb, size))
                    plotted = True
        if not plotted:
            plt.close(fig)
            continue
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel(f"NMSE({factor}) (dB)")
        ax.grid(True, alpha=0.4)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = outdir / f"nmse_{factor}.png"
        fig.savefig(path, dpi=150, metadata=metadata)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for size in sizes:
        for rb in sorted({a.point.r_b for a in aggregates}):
            series = sorted(
                (a for a in aggregates
                 if a.point.r_b == rb and _size_tag(a.point) == size),
                key=lambda a: a.point.snr_db,
            )
            for method in sorted({a.method for a in series}):
                pts = [(a.point.snr_db, a.runtime_s_mean)
                       for a in series if a.method == method]
                ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o",
                        label=series_label(method, rb, size))
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("mean runtime (s)")
    ax.set_yscale("log")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "runtime.png"
    fig.savefig(path, dpi=150, metadata=metadata)
    plt.close(fig)
    written.append(path)
    return written


def emit_results(aggregates, formats, outdir, manifest: dict) -> list:
    """Write the delimited tables, plot-data series and rendered figures.

    ``formats`` selects the main tables ({"csv", "json"}); plot-data files
    and figures are always produced. Returns the written paths.
    """
    if not aggregates:
        raise ValueError("no aggregates to emit")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = outdir / "results.csv"
        _write_csv(aggregates, path)
        written.append(path)
    if "json" in formats:
        path = outdir / "results.json"
        _write_json(aggregates, manifest, path)
        written.append(path)
    written += _write_plot_data(aggregates, outdir, manifest)
    written += _render_figures(aggregates, outdir, manifest)
    return written
