"""Command-line front end: configs, experiment orchestration, CSV + SVG.

Usage:
    crystal-current run <config> [--threads N] [--plot] [--out PREFIX]
    crystal-current chern|kubo|predict|dirac-check <config> [...]

The subcommand aliases override the `mode` key of the config. Configs are
flat INI files; `preset = phase-a|b|c|d` expands to the four canonical
honeycomb parameter sets. Dynamics CSVs carry a `#`-prefixed echo of the
config (no timestamps), so identical configs reproduce byte-identical
files regardless of thread count.
"""

import argparse
import os
import sys
from configparser import ConfigParser, Error as ConfigError
from dataclasses import dataclass, field

import numpy as np

from . import observables
from .dynamics import IntegratorOptions
from .lattice import make_grid
from .models import (DiracModel, HaldaneModel, TBModel, dirac_points,
                     load_hopping_list)

PRESETS = {
    # (g, t2, mu_F)
    "phase-a": (1.0, 0.0, 0.0),   # normal insulator
    "phase-b": (1.0, -1.0, 0.0),  # Chern insulator
    "phase-c": (1.0, 0.0, -2.0),  # metal
    "phase-d": (0.0, 0.0, 0.0),   # semimetal
}

MODES = ("dynamics", "kubo", "chern", "predictors", "dirac-check")


@dataclass
class RunConfig:
    model_kind: str = "haldane"
    g: float = 1.0
    t2: float = 0.0
    vF: float = 1.0
    tb_file: str = ""
    mu_F: float = 0.0
    eps: float = 0.0
    e_alpha: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))
    e_beta: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))
    grid_n: int = 60
    grid_shift: str = "auto"   # 'auto' or two fractional numbers
    t_max: float = 100.0
    dt_sample: float = 0.5
    dt: float | None = None
    mode: str = "dynamics"
    output: str = "crystal-current-out"
    threads: str = "auto"
    dirac_delta: float = 1.0
    dirac_t: float = 200.0
    echo: dict = field(default_factory=dict)


def _vec2(text, name):
    parts = text.split()
    if len(parts) != 2:
        raise ValueError(f"field {name}: expected two numbers, got {text!r}")
    return np.array([float(parts[0]), float(parts[1])])


def load_config(path):
    """Parse and validate an INI config into a RunConfig."""
    parser = ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        try:
            parser.read_file(fh, source=path)
        except ConfigError as exc:
            raise ValueError(f"parse error in {path}: {exc}") from exc
    if not parser.has_section("model"):
        raise ValueError("missing config section: model")
    cfg = RunConfig()
    m = parser["model"]
    if "preset" in m:
        preset = m["preset"].strip()
        if preset not in PRESETS:
            raise ValueError(f"field preset: unknown preset {preset!r}")
        cfg.g, cfg.t2, cfg.mu_F = PRESETS[preset]
        cfg.model_kind = "haldane"
    if "type" in m:
        cfg.model_kind = m["type"].strip()
        if cfg.model_kind not in ("haldane", "dirac", "tb"):
            raise ValueError(f"field type: unknown model {cfg.model_kind!r}")
    cfg.g = m.getfloat("g", cfg.g)
    cfg.t2 = m.getfloat("t2", cfg.t2)
    cfg.vF = m.getfloat("vF", cfg.vF)
    cfg.tb_file = m.get("file", cfg.tb_file)
    if cfg.model_kind == "tb" and not cfg.tb_file:
        raise ValueError("field file: tb model needs a hopping-list path")

    r = parser["run"] if parser.has_section("run") else {}
    if hasattr(r, "getfloat"):
        cfg.mu_F = r.getfloat("mu_F", cfg.mu_F)
        cfg.eps = r.getfloat("eps", cfg.eps)
        cfg.grid_n = r.getint("grid_n", cfg.grid_n)
        cfg.t_max = r.getfloat("t_max", cfg.t_max)
        cfg.dt_sample = r.getfloat("dt_sample", cfg.dt_sample)
        if "dt" in r:
            cfg.dt = r.getfloat("dt")
        cfg.mode = r.get("mode", cfg.mode)
        cfg.output = r.get("output", cfg.output)
        cfg.threads = r.get("threads", cfg.threads)
        cfg.grid_shift = r.get("grid_shift", cfg.grid_shift)
        if "e_alpha" in r:
            cfg.e_alpha = _vec2(r["e_alpha"], "e_alpha")
        if "e_beta" in r:
            cfg.e_beta = _vec2(r["e_beta"], "e_beta")
    if parser.has_section("dirac"):
        d = parser["dirac"]
        cfg.dirac_delta = d.getfloat("delta", cfg.dirac_delta)
        cfg.vF = d.getfloat("vF", cfg.vF)
        cfg.dirac_t = d.getfloat("t", cfg.dirac_t)

    if cfg.eps < 0:
        raise ValueError("field eps: must be >= 0")
    if cfg.grid_n < 1:
        raise ValueError("field grid_n: must be >= 1")
    if cfg.t_max < 0:
        raise ValueError("field t_max: must be >= 0")
    if cfg.mode not in MODES:
        raise ValueError(f"field mode: unknown mode {cfg.mode!r}")

    cfg.echo = {f"{sec}.{key}": val for sec in parser.sections()
                for key, val in parser[sec].items()}
    return cfg


def build_model(cfg):
    if cfg.model_kind == "haldane":
        return HaldaneModel(cfg.g, cfg.t2)
    if cfg.model_kind == "dirac":
        return DiracModel(cfg.vF)
    return TBModel(load_hopping_list(cfg.tb_file))


def _grid_for(cfg, model):
    if cfg.grid_shift == "auto":
        # keep grid points off conical crossings in semimetal runs
        probe = make_grid(model.lattice, cfg.grid_n)
        if observables.classify_phase(model, cfg.mu_F, probe) == "semimetal":
            shift = (0.5 / cfg.grid_n, 0.5 / cfg.grid_n)
        else:
            shift = (0.0, 0.0)
    else:
        shift = tuple(_vec2(cfg.grid_shift, "grid_shift"))
    return make_grid(model.lattice, cfg.grid_n, shift)


def _directions(cfg, lat):
    ea = cfg.e_alpha[0] * lat.b1 + cfg.e_alpha[1] * lat.b2
    eb = cfg.e_beta[0] * lat.b1 + cfg.e_beta[1] * lat.b2
    return ea, eb


def _header_lines(cfg):
    lines = [f"# {key} = {val}" for key, val in sorted(cfg.echo.items())]
    return lines


def write_csv(path, cfg, columns, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        for line in _header_lines(cfg):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for x in row:
                if isinstance(x, float) or isinstance(x, np.floating):
                    cells.append(repr(float(x)))
                else:
                    cells.append(str(x))
            fh.write(",".join(cells) + "\n")


def write_svg(path, times, series, title=""):
    """Minimal hand-rolled polyline plot (no plotting dependency)."""
    width, height, mg = 800, 500, 60
    xs = np.asarray(times, dtype=float)
    all_y = np.concatenate([np.asarray(y, dtype=float) for _, y in series])
    y_lo, y_hi = float(np.min(all_y)), float(np.max(all_y))
    if y_hi - y_lo < 1e-300:
        y_hi = y_lo + 1.0
    x_lo, x_hi = float(xs[0]), float(xs[-1]) if xs[-1] > xs[0] else xs[0] + 1.0

    def px(x):
        return mg + (x - x_lo) / (x_hi - x_lo) * (width - 2 * mg)

    def py(y):
        return height - mg - (y - y_lo) / (y_hi - y_lo) * (height - 2 * mg)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{mg}" y1="{height-mg}" x2="{width-mg}" '
             f'y2="{height-mg}" stroke="black"/>',
             f'<line x1="{mg}" y1="{mg}" x2="{mg}" y2="{height-mg}" '
             f'stroke="black"/>',
             f'<text x="{width//2}" y="24" text-anchor="middle" '
             f'font-size="16">{title}</text>',
             f'<text x="{width//2}" y="{height-16}" text-anchor="middle" '
             f'font-size="12">t</text>',
             f'<text x="12" y="16" font-size="12">{y_hi:.4g}</text>',
             f'<text x="12" y="{height-mg}" font-size="12">{y_lo:.4g}</text>']
    for idx, (label, ys) in enumerate(series):
        col = colors[idx % len(colors)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{width-mg+4}" y="{mg + 16*idx}" '
                     f'font-size="12" fill="{col}">{label}</text>')
    parts.append("</svg>")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _sample_times(cfg):
    n = int(round(cfg.t_max / cfg.dt_sample))
    times = np.arange(n + 1) * cfg.dt_sample
    if times[-1] < cfg.t_max - 1e-12:
        times = np.append(times, cfg.t_max)
    return times


def run(cfg, plot=False):
    """Execute one configured experiment; returns process exit status."""
    model = build_model(cfg)
    if cfg.mode == "dirac-check":
        I = observables.dirac_timeavg(cfg.dirac_delta, cfg.vF, cfg.dirac_t)
        rows = [(i, j, I[i, j].real, I[i, j].imag)
                for i in range(2) for j in range(2)]
        write_csv(cfg.output + ".csv", cfg, ["i", "j", "re", "im"], rows)
        return 0

    grid = _grid_for(cfg, model)
    ea, eb = _directions(cfg, model.lattice)

    if cfg.mode == "chern":
        _, chern = observables.berry_chern(model, cfg.mu_F, grid)
        sigma12 = chern / (2.0 * np.pi)
        write_csv(cfg.output + ".csv", cfg, ["key", "value"],
                  [("chern", chern), ("sigma12", sigma12)])
        return 0

    if cfg.mode == "predictors":
        # classify on an unshifted probe: conical crossings sit on the
        # unshifted grid, while `grid` may be shifted to avoid them
        probe = make_grid(model.lattice, cfg.grid_n)
        phase = observables.classify_phase(model, cfg.mu_F, probe)
        rows = [("classification", phase)]
        if phase == "insulator":
            _, val = observables.hall_sigma(model, cfg.mu_F, grid, ea, eb)
            rows.append(("hall_contraction", repr(float(val))))
        elif phase == "metal":
            D = observables.ballistic_D(model, cfg.mu_F, grid, ea, eb)
            rows.append(("ballistic_D", repr(float(D))))
        else:
            kd = dirac_points(model)
            rows.append(("n_dirac", str(len(kd))))
            rows.append(("semimetal_sigma", repr(float(
                observables.semimetal_sigma(len(kd), ea, eb)))))
        write_csv(cfg.output + ".csv", cfg, ["kind", "value"], rows)
        return 0

    times = _sample_times(cfg)
    opts = IntegratorOptions(dt=cfg.dt)
    if cfg.mode == "kubo":
        inst = observables.kubo_trace(model, grid, cfg.mu_F, ea, eb, times)
        avg = observables.kubo_trace(model, grid, cfg.mu_F, ea, eb,
                                     times, averaged=True)
        cols = ["t", "jlr_inst", "jlr_timeavg"]
        rows = list(zip(times, inst.j_inst, avg.j_inst))
        write_csv(cfg.output + ".csv", cfg, cols, rows)
        if plot:
            write_svg(cfg.output + ".svg", times,
                      [("jlr_inst", inst.j_inst),
                       ("jlr_timeavg", avg.j_inst)], "linear response")
        return 0

    # dynamics
    trace = observables.current_trace(model, grid, cfg.eps, ea, eb,
                                      cfg.mu_F, times, opts=opts,
                                      threads=cfg.threads)
    eps = cfg.eps if cfg.eps > 0 else np.nan
    cols = ["t", "j_inst", "j_runavg", "j_inst_over_eps", "j_runavg_over_eps"]
    rows = list(zip(times, trace.j_inst, trace.j_runavg,
                    trace.j_inst / eps, trace.j_runavg / eps))
    write_csv(cfg.output + ".csv", cfg, cols, rows)
    if plot:
        if cfg.eps > 0:
            series = [("j_inst/eps", trace.j_inst / eps),
                      ("j_runavg/eps", trace.j_runavg / eps)]
        else:
            series = [("j_inst", trace.j_inst),
                      ("j_runavg", trace.j_runavg)]
        write_svg(cfg.output + ".svg", times, series, "current response")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="crystal-current",
        description="current response of tight-binding crystals after an "
                    "electric-field switch-on")
    sub = parser.add_subparsers(dest="command", required=True)
    alias_mode = {"run": None, "chern": "chern", "kubo": "kubo",
                  "predict": "predictors", "dirac-check": "dirac-check"}
    for name in alias_mode:
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--threads", default=None)
        p.add_argument("--plot", action="store_true")
        p.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if alias_mode[args.command]:
            cfg.mode = alias_mode[args.command]
        if args.threads is not None:
            cfg.threads = args.threads
        if args.out is not None:
            cfg.output = args.out
        return run(cfg, plot=args.plot)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
