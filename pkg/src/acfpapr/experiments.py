"""Configuration-driven CCDF / BER experiments, result tables and plot scripts.

Output files (all CSVs carry a header naming units)::

    ccdf_<mod>_<pipeline>.csv   PAPR distributions (pipeline none/existing/proposed)
    papr_summary_<mod>.csv      PAPR at the CCDF readout level per (pipeline, CR)
    ber_<mod>_<pipeline>.csv    BER vs Eb/N0 with the analytical reference
    table2.csv .. table5.csv    PAPR (QPSK, QAM16) and BER (QPSK, QAM16) comparisons
    fig5.gp .. fig8.gp          gnuplot scripts for the above
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .link import PIPELINES, FilterSettings, Link, simulate_ber
from .metrics import CcdfCurve, collect_papr
from .modem import ModulationScheme, analytical_ber
from .ofdm import OfdmConfig
from .channel import BerSample

log = logging.getLogger(__name__)

FIGURES = {
    ("ccdf", ModulationScheme.QPSK): 5,
    ("ccdf", ModulationScheme.QAM16): 6,
    ("ber", ModulationScheme.QPSK): 7,
    ("ber", ModulationScheme.QAM16): 8,
}
PAPR_TABLES = {ModulationScheme.QPSK: 2, ModulationScheme.QAM16: 3}
BER_TABLES = {ModulationScheme.QPSK: 4, ModulationScheme.QAM16: 5}


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 128
    L: int = 8
    bw: float = 1e6
    fc: float = 2e6
    cp_len: int = 32
    frame_len: int | None = None
    modulations: tuple = (ModulationScheme.QPSK, ModulationScheme.QAM16)
    pipelines: tuple = ("existing", "proposed")
    cr_list: tuple = (0.8, 1.0, 1.2, 1.4, 1.6)
    ebn0_start: float = 0.0
    ebn0_stop: float = 10.0
    ebn0_step: float = 2.0
    table_ebn0: float = 6.0
    ccdf_level: float = 0.1
    trials: int = 10_000
    ber_min_errors: int = 200
    ber_max_bits: int = 2_000_000
    ber_batch: int = 64
    seed: int = 1
    out: str = "results"
    sigma_mode: str = "symbol"
    workers: int = 1
    cheb_order: int = FilterSettings.cheb_order
    cheb_ripple_db: float = FilterSettings.cheb_ripple_db
    cheb_f_low: float | None = None
    cheb_f_high: float | None = None
    fir_taps: int = FilterSettings.fir_taps
    fir_f_low: float | None = None
    fir_f_high: float | None = None
    existing_kind: str = FilterSettings.existing_kind

    def __post_init__(self):
        mods = tuple(ModulationScheme.parse(m) for m in self.modulations)
        object.__setattr__(self, "modulations", mods)
        object.__setattr__(self, "cr_list", tuple(float(c) for c in self.cr_list))
        object.__setattr__(self, "pipelines", tuple(self.pipelines))
        if not mods:
            raise ValueError("modulation list is empty")
        if not self.cr_list:
            raise ValueError("clipping-ratio list is empty")
        if any(c <= 0 for c in self.cr_list):
            raise ValueError("clipping ratios must be positive")
        for p in self.pipelines:
            if p not in PIPELINES or p == "none":
                raise ValueError(f"pipeline {p!r} is not one of existing/proposed")
        if self.ebn0_step <= 0 or self.ebn0_stop < self.ebn0_start:
            raise ValueError("Eb/N0 sweep is empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.ber_max_bits < 1 or self.ber_batch < 1:
            raise ValueError("BER budget must be positive")
        for m in mods:
            self.ofdm(m)  # validates the system parameters

    def ofdm(self, scheme: ModulationScheme) -> OfdmConfig:
        return OfdmConfig(self.N, self.L, self.bw, self.fc, self.cp_len, scheme, self.frame_len)

    def filter_settings(self) -> FilterSettings:
        names = {f.name for f in fields(FilterSettings)}
        return FilterSettings(**{k: getattr(self, k) for k in names})

    def link(self, scheme: ModulationScheme) -> Link:
        return Link.build(self.ofdm(scheme), self.filter_settings(), self.sigma_mode)

    def ebn0_grid(self) -> np.ndarray:
        n = int(math.floor((self.ebn0_stop - self.ebn0_start) / self.ebn0_step + 1e-9)) + 1
        return np.round(self.ebn0_start + self.ebn0_step * np.arange(n), 10)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _parse_value(name: str, text: str):
    text = text.strip()
    default = next(f.default for f in fields(ExperimentConfig) if f.name == name)
    if name == "modulations":
        return tuple(ModulationScheme.parse(t) for t in text.replace(",", " ").split())
    if name in ("pipelines",):
        return tuple(t for t in text.replace(",", " ").split())
    if name == "cr_list":
        return tuple(float(t) for t in text.replace(",", " ").split())
    if text.lower() in ("none", ""):
        return None
    if name in ("out", "sigma_mode", "existing_kind"):
        return text
    if isinstance(default, int) or name == "frame_len":
        return int(float(text)) if float(text).is_integer() else _bad(name, text)
    return float(text)


def _bad(name, text):
    raise ValueError(f"config key {name!r}: expected an integer, got {text!r}")


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments); unknown keys are errors."""
    values = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ValueError(f"cannot read config file {path}: {exc.strerror}") from exc
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
        parser.optionxform = str
        parser.read_string("[experiment]\n" + text, source=str(path))
        known = {f.name for f in fields(ExperimentConfig)}
        for key, raw in parser["experiment"].items():
            if key not in known:
                raise ValueError(f"{path}: unknown config key {key!r}")
            values[key] = _parse_value(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(m.value if isinstance(m, ModulationScheme) else str(m) for m in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- outputs

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _out_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {path} is not writable: {exc.strerror}") from exc
    return path


def write_csv(path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return Path(path)


@dataclass(frozen=True)
class PlotSeries:
    """One curve of a plot: columns of a CSV, optionally filtered on the CR column."""

    csv: str
    label: str
    x: int
    y: int
    cr: float | None = None
    style: str = "lines"


@dataclass(frozen=True)
class PlotPanel:
    title: str
    series: tuple


def emit_plot_script(panels, kind: str, path, title: str = "") -> Path:
    """Write a standalone gnuplot script (log-scale y) for ``ccdf`` or ``ber`` data."""
    if kind not in ("ccdf", "ber"):
        raise ValueError(f"unknown plot kind {kind!r}")
    panels = [p for p in panels]
    if not panels or any(not p.series for p in panels):
        raise ValueError("nothing to plot: empty series list")
    xlabel, ylabel, yrange = (
        ("PAPR_0 [dB]", "CCDF  Pr(PAPR > PAPR_0)", "[1e-4:1]") if kind == "ccdf"
        else ("Eb/N0 [dB]", "BER", "[1e-6:1]")
    )
    out = [
        "# gnuplot script; run from the directory holding the CSV files",
        f"set terminal pngcairo size {640 * len(panels)},480",
        f"set output '{Path(path).with_suffix('.png').name}'",
        "set datafile separator ','",
        "set logscale y",
        "set format y '10^{%T}'",
        f"set yrange {yrange}",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set grid",
        "set key top right",
        f"set multiplot layout 1,{len(panels)} title '{title}'",
    ]
    for panel in panels:
        out.append(f"set title '{panel.title}'")
        parts = []
        for s in panel.series:
            if s.cr is None:
                using = f"{s.x}:{s.y}"
            else:
                using = f"{s.x}:(abs($1-{s.cr!r})<1e-9 ? ${s.y} : NaN)"
            parts.append(f"'{s.csv}' every ::1 using {using} with {s.style} title '{s.label}'")
        out.append("plot " + ", \\\n     ".join(parts))
    out.append("unset multiplot")
    Path(path).write_text("\n".join(out) + "\n")
    return Path(path)


# ------------------------------------------------------------ experiments

@dataclass
class ResultRow:
    papr_existing_db: float = float("nan")
    papr_proposed_db: float = float("nan")
    ber_existing: float = float("nan")
    ber_proposed: float = float("nan")

    @property
    def improvement_db(self) -> float:
        return self.papr_existing_db - self.papr_proposed_db

    @property
    def ber_difference(self) -> float:
        """Existing minus proposed BER; negative when the proposed filter costs BER."""
        return self.ber_existing - self.ber_proposed


@dataclass
class ResultTable:
    rows: dict = field(default_factory=dict)
    unclipped_papr_db: dict = field(default_factory=dict)

    def row(self, scheme: ModulationScheme, cr: float) -> ResultRow:
        return self.rows.setdefault((scheme, float(cr)), ResultRow())

    def crs(self, scheme: ModulationScheme) -> list[float]:
        return sorted(cr for (m, cr) in self.rows if m is scheme)


@dataclass
class CcdfResult:
    scheme: ModulationScheme
    curves: dict  # (pipeline, cr or None) -> CcdfCurve
    level: float

    def readout(self, pipeline: str, cr: float | None) -> float:
        return self.curves[(pipeline, cr)].papr_at_ccdf(self.level)


@dataclass
class BerResult:
    scheme: ModulationScheme
    samples: dict  # (pipeline, cr or None) -> list[BerSample]

    def at(self, pipeline: str, cr: float | None, ebn0_db: float) -> BerSample:
        for s in self.samples[(pipeline, cr)]:
            if abs(s.ebn0_db - ebn0_db) < 1e-9:
                return s
        raise ValueError(f"no BER point at {ebn0_db} dB in the Eb/N0 sweep")


def run_ccdf_experiment(cfg: ExperimentConfig, write: bool = True) -> list[CcdfResult]:
    out = _out_dir(cfg.out) if write else None
    results = []
    for scheme in cfg.modulations:
        link = cfg.link(scheme)
        ocfg = link.cfg
        curves = {("none", None): collect_papr(ocfg, "none", None, cfg.trials, cfg.seed, link, cfg.workers)}
        for pipeline in cfg.pipelines:
            for cr in cfg.cr_list:
                log.info("ccdf %s %s CR=%.2f", scheme.value, pipeline, cr)
                curves[(pipeline, cr)] = collect_papr(ocfg, pipeline, cr, cfg.trials, cfg.seed, link, cfg.workers)
        res = CcdfResult(scheme, curves, cfg.ccdf_level)
        results.append(res)
        if out is not None:
            _write_ccdf(out, res, cfg)
    return results


def _write_ccdf(out: Path, res: CcdfResult, cfg: ExperimentConfig):
    mod = res.scheme.value
    res.curves[("none", None)].to_csv(out / f"ccdf_{mod}_none.csv")
    for pipeline in cfg.pipelines:
        rows = []
        for cr in cfg.cr_list:
            x, y = res.curves[(pipeline, cr)].steps()
            rows += [(cr, a, b) for a, b in zip(x, y)]
        write_csv(out / f"ccdf_{mod}_{pipeline}.csv", ["clipping_ratio", "papr_dB", "ccdf_probability"], rows)
    summary = [("none", "inf", res.readout("none", None))]
    summary += [(p, cr, res.readout(p, cr)) for p in cfg.pipelines for cr in cfg.cr_list]
    write_csv(out / f"papr_summary_{mod}.csv",
              ["pipeline", "clipping_ratio", f"papr_dB_at_ccdf_{cfg.ccdf_level:g}"], summary)
    panels = []
    for pipeline in cfg.pipelines:
        series = [PlotSeries(f"ccdf_{mod}_none.csv", "Unclipped", 1, 2)]
        series += [PlotSeries(f"ccdf_{mod}_{pipeline}.csv", f"CR={cr:g}", 2, 3, cr) for cr in cfg.cr_list]
        panels.append(PlotPanel(f"{pipeline} method", tuple(series)))
    fig = FIGURES.get(("ccdf", res.scheme))
    name = f"fig{fig}.gp" if fig else f"ccdf_{mod}.gp"
    emit_plot_script(panels, "ccdf", out / name, f"PAPR distribution [{res.scheme.name}, N={cfg.N}]")


def run_ber_experiment(cfg: ExperimentConfig, write: bool = True) -> list[BerResult]:
    out = _out_dir(cfg.out) if write else None
    grid = cfg.ebn0_grid()
    results = []
    for scheme in cfg.modulations:
        link = cfg.link(scheme)
        cells = [("none", None)] + [(p, cr) for p in cfg.pipelines for cr in cfg.cr_list]
        samples = {}
        for pipeline, cr in cells:
            log.info("ber %s %s CR=%s", scheme.value, pipeline, cr)
            samples[(pipeline, cr)] = [
                simulate_ber(link, pipeline, cr, float(e), cfg.seed, cfg.ber_min_errors, cfg.ber_max_bits,
                             cfg.ber_batch, cfg.workers)
                for e in grid
            ]
        res = BerResult(scheme, samples)
        results.append(res)
        if out is not None:
            _write_ber(out, res, cfg)
    return results


def _write_ber(out: Path, res: BerResult, cfg: ExperimentConfig):
    mod = res.scheme.value
    header = ["clipping_ratio", "ebn0_dB", "bit_errors", "bits_sent", "ber_probability",
              "analytical_ber_probability"]
    for pipeline in ("none",) + cfg.pipelines:
        crs = [None] if pipeline == "none" else list(cfg.cr_list)
        rows = []
        for cr in crs:
            for s in res.samples[(pipeline, cr)]:
                rows.append(("inf" if cr is None else cr, s.ebn0_db, s.bit_errors, s.bits_sent, s.ber,
                             analytical_ber(res.scheme, s.ebn0_db)))
        write_csv(out / f"ber_{mod}_{pipeline}.csv", header, rows)
    panels = []
    for pipeline in cfg.pipelines:
        series = [PlotSeries(f"ber_{mod}_none.csv", "Analytical", 2, 6, style="lines"),
                  PlotSeries(f"ber_{mod}_none.csv", "Unclipped", 2, 5, style="points")]
        series += [PlotSeries(f"ber_{mod}_{pipeline}.csv", f"CR={cr:g}", 2, 5, cr, "linespoints")
                   for cr in cfg.cr_list]
        panels.append(PlotPanel(f"{pipeline} method", tuple(series)))
    fig = FIGURES.get(("ber", res.scheme))
    name = f"fig{fig}.gp" if fig else f"ber_{mod}.gp"
    emit_plot_script(panels, "ber", out / name, f"BER performance [{res.scheme.name}, N={cfg.N}]")


def check_table_point(cfg: ExperimentConfig) -> None:
    if not np.any(np.abs(cfg.ebn0_grid() - cfg.table_ebn0) < 1e-9):
        raise ValueError(f"table_ebn0 = {cfg.table_ebn0:g} dB is not on the Eb/N0 sweep {cfg.ebn0_grid().tolist()}")


def build_table(ccdf: list[CcdfResult], ber: list[BerResult], cfg: ExperimentConfig) -> ResultTable:
    table = ResultTable()
    for res in ccdf:
        table.unclipped_papr_db[res.scheme] = res.readout("none", None)
        for cr in cfg.cr_list:
            row = table.row(res.scheme, cr)
            row.papr_existing_db = res.readout("existing", cr)
            row.papr_proposed_db = res.readout("proposed", cr)
    for res in ber:
        for cr in cfg.cr_list:
            row = table.row(res.scheme, cr)
            row.ber_existing = res.at("existing", cr, cfg.table_ebn0).ber
            row.ber_proposed = res.at("proposed", cr, cfg.table_ebn0).ber
    return table


def write_tables(table: ResultTable, cfg: ExperimentConfig) -> list[Path]:
    out = _out_dir(cfg.out)
    written = []
    for scheme in cfg.modulations:
        crs = table.crs(scheme)
        n = PAPR_TABLES[scheme]
        rows = [("unclipped", table.unclipped_papr_db[scheme], table.unclipped_papr_db[scheme], 0.0)]
        rows += [(cr, table.row(scheme, cr).papr_existing_db, table.row(scheme, cr).papr_proposed_db,
                  table.row(scheme, cr).improvement_db) for cr in crs]
        written.append(write_csv(out / f"table{n}.csv",
                                 ["clipping_ratio", "papr_existing_dB", "papr_proposed_dB", "improvement_dB"], rows))
        n = BER_TABLES[scheme]
        rows = [(cr, table.row(scheme, cr).ber_existing, table.row(scheme, cr).ber_proposed,
                 table.row(scheme, cr).ber_difference) for cr in crs]
        written.append(write_csv(out / f"table{n}.csv",
                                 ["clipping_ratio", "ber_existing_probability", "ber_proposed_probability",
                                  "ber_difference_probability"], rows))
    return written


def format_summary(table: ResultTable, cfg: ExperimentConfig) -> str:
    """Human-readable tables, dB rounded to 2 decimals and BER to 5."""
    lines = []
    for scheme in cfg.modulations:
        lines.append(f"PAPR at CCDF={cfg.ccdf_level:g} [{scheme.name}, N={cfg.N}]  "
                     f"unclipped {table.unclipped_papr_db[scheme]:.2f} dB")
        lines.append(f"{'CR':>5} {'existing dB':>12} {'proposed dB':>12} {'improvement':>12}")
        for cr in table.crs(scheme):
            r = table.row(scheme, cr)
            lines.append(f"{cr:5.1f} {r.papr_existing_db:12.2f} {r.papr_proposed_db:12.2f} {r.improvement_db:12.2f}")
        lines.append(f"BER at Eb/N0={cfg.table_ebn0:g} dB [{scheme.name}, N={cfg.N}]")
        lines.append(f"{'CR':>5} {'existing':>12} {'proposed':>12} {'difference':>12}")
        for cr in table.crs(scheme):
            r = table.row(scheme, cr)
            lines.append(f"{cr:5.1f} {r.ber_existing:12.5f} {r.ber_proposed:12.5f} {r.ber_difference:12.5f}")
        lines.append("")
    return "\n".join(lines)


def design_filter_report(cfg: ExperimentConfig, write: bool = True) -> dict:
    """Dump the Chebyshev SOS coefficients, FIR taps and both responses."""
    from .clipfilter import write_sos

    ocfg = cfg.ofdm(cfg.modulations[0])
    link = cfg.link(cfg.modulations[0])
    existing, proposed = link.filters["existing"], link.filters["proposed"]
    report = {"existing": existing, "proposed": proposed}
    if write:
        out = _out_dir(cfg.out)
        write_sos(out / "chebyshev1_sos.txt", proposed.sos)
        if existing.taps is not None:
            np.savetxt(out / "fir_taps.txt", existing.taps, fmt="%.17g")
        half = ocfg.frame_size // 2 + 1
        f = proposed.freqs[:half]
        with np.errstate(divide="ignore"):
            rows = zip(f, 20 * np.log10(np.abs(existing.H[:half])), 20 * np.log10(np.abs(proposed.H[:half])),
                       np.angle(proposed.H[:half]))
            write_csv(out / "filter_response.csv",
                      ["frequency_Hz", "existing_magnitude_dB", "proposed_magnitude_dB", "proposed_phase_rad"],
                      rows)
    return report
