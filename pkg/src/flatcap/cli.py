"""Command-line front end.

Every command writes its tables as CSV (17 significant digits) into --out,
then a manifest.json listing the resolved configuration and the outputs.
Settings resolve as: command-line flags, then the --config JSON file, then
built-in defaults.  Exit codes: 0 success, 2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .geometry import CapGeometry, CapSchedule
from .kinetics import BrusselatorParams, curves_in_region, marginal_A
from .specfun import degree_roots

DEFAULT_EPSILONS = (3e-8, 1e-7, 3e-7, 1e-6)

# simulation presets; values not listed fall back to SimConfig defaults
PRESETS = {
    "fig5": dict(epsilon=1e-6, gamma0=0.4915, gamma_end=0.4515, ic="eigenmode", grid=(128, 40)),
    "fig6": dict(epsilon=1e-6, gamma0=0.5015, gamma_end=0.4915, ic="zero", affine=True, grid=(128, 8)),
    "fig7": dict(epsilon=1e-6, gamma0=0.4915, gamma_end=0.4315, ic="noise", grid=(64, 40),
                 track="0,1;1,1;2,1;3,1;4,1;6,1;7,1;8,1;5,2;0,2;0,3"),
    "fig8": dict(epsilon=1e-6, gamma0=0.4915, gamma_end=0.4515, ic="eigenmode", grid=(64, 40),
                 resolutions="64,128,256"),
}


class Run:
    """Output directory bookkeeping and the manifest written at the end."""

    def __init__(self, command, out, config, plot=False):
        self.command = command
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.plot = plot
        self.files = []
        self.t0 = time.perf_counter()

    def path(self, name):
        p = self.out / name
        self.files.append(name)
        return p

    def write_rows(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def figure(self, name, draw):
        if not self.plot:
            return
        from . import plots
        plots.render(self.path(name), draw)

    def finish(self):
        manifest = {
            "command": self.command,
            "version": __version__,
            "config": self.config,
            "outputs": list(self.files),
            "wall_time_s": time.perf_counter() - self.t0,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_jsonable))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, tuple):
        return list(v)
    return str(v)


def _opt(cfg, key, default=None):
    """Value of a setting, recording the default so the manifest shows it."""
    if key not in cfg and default is not None:
        cfg[key] = default
    return cfg.get(key, default)


def _pair(text, name="mode"):
    try:
        a, b = (int(t) for t in str(text).split(","))
    except ValueError:
        raise ValidationError(f"--{name} expects two integers 'a,b', got {text!r}") from None
    return a, b


def _mode_list(text):
    items = [t for t in str(text).split(";") if t.strip()]
    if not items:
        raise ValidationError("empty mode list")
    return [_pair(t) for t in items]


def _float_list(text):
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ValidationError("empty list")
    return vals


# -- argument parsing --------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="flatcap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--config", help="JSON file with settings (flags take precedence)")
        sp.add_argument("--plot", action="store_true", help="also render PNG figures")
        sp.add_argument("--A", type=float, help="feed parameter A")
        return sp

    sp = common(sub.add_parser("curves", help="marginal stability curves A_mn(gamma)"))
    sp.add_argument("--modes", help="semicolon-separated list 'm,n;m,n' (default: scan the region)")
    sp.add_argument("--gamma0", type=float, help="lower curvature of the scan (default 0.3)")
    sp.add_argument("--gamma-end", type=float, help="upper curvature of the scan (default 0.8)")
    sp.add_argument("--samples", type=int, help="curvature samples (default 101)")

    sp = common(sub.add_parser("eigen", help="critical eigenpair of one mode"))
    sp.add_argument("--mode", help="m,n (default 5,1)")
    sp.add_argument("--gamma0", type=float, help="curvature (default 0.5)")
    sp.add_argument("--convention", help="amplitude convention")

    sp = common(sub.add_parser("qp", help="quasi-patternless correction X01"))
    sp.add_argument("--gamma0", type=float, help="curvature (default 0.4915)")
    sp.add_argument("--samples", type=int, help="number of series terms (default 5)")

    for name, text in (("nfcoef", "normal-form coefficient table"), ("nf", "normal-form trajectories")):
        sp = common(sub.add_parser(name, help=text))
        sp.add_argument("--gamma0", type=float, help="first curvature of the window (default 0.51)")
        sp.add_argument("--gamma-end", type=float, help="last curvature of the window (default 0.4515)")
        sp.add_argument("--epsilon", help="epsilon, or a comma list for nf (default: four-value sweep)")
        sp.add_argument("--samples", type=int, help="table samples (default 36)")
        sp.add_argument("--mode", help="m,n (default 5,1)")
        sp.add_argument("--convention", help="amplitude convention")
        if name == "nf":
            sp.add_argument("--x0", type=float, help="initial amplitude (default 0.002305)")

    for name, text in (("sim", "direct simulation"), ("converge", "grid-convergence study")):
        sp = common(sub.add_parser(name, help=text))
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--gamma0", type=float)
        sp.add_argument("--gamma-end", type=float)
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--mode", help="m,n (default 5,1)")
        sp.add_argument("--grid", help="Nw,Nphi")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--cadence", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--ic", choices=["eigenmode", "noise", "zero"])
        sp.add_argument("--affine", action="store_true", default=None,
                        help="affine operator run for the quasi-patternless profile")
        sp.add_argument("--track", help="extra projections 'm,n;m,n'")
        sp.add_argument("--snapshots", help="comma list of curvatures at which to save the field")
        sp.add_argument("--sample-every", type=int)
        if name == "converge":
            sp.add_argument("--resolutions", help="comma list of Nw values (Nphi from --grid)")

    sp = common(sub.add_parser("project", help="mode projection of a saved snapshot"))
    sp.add_argument("snapshot", help=".npz file written by sim")
    sp.add_argument("--mode", help="m,n (default 5,1)")
    sp.add_argument("--convention", help="amplitude convention")
    return ap


def resolve(args):
    """Merge flags over the JSON config over the preset; returns a plain dict."""
    cfg = {}
    preset = getattr(args, "preset", None)
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ValidationError("config file must hold a JSON object")
        if "config" in file_cfg and "outputs" in file_cfg:
            # a manifest from an earlier run
            file_cfg = file_cfg["config"]
        preset = preset or file_cfg.get("preset")
    else:
        file_cfg = {}
    if preset:
        cfg.update(PRESETS[preset])
        cfg["preset"] = preset
    cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    for k, v in vars(args).items():
        if k in ("command", "config", "out", "plot", "preset") or v is None:
            continue
        cfg[k] = v
    return cfg


def params_from(cfg):
    extra = dict(_opt(cfg, "params", {}))
    if _opt(cfg, "A") is not None:
        extra["A"] = cfg["A"]
    try:
        return BrusselatorParams(**extra)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None


# -- commands ------------------------------------------------------------------

def cmd_curves(cfg, run: Run):
    p = params_from(cfg)
    g_lo = float(_opt(cfg, "gamma0", 0.3))
    g_hi = float(_opt(cfg, "gamma_end", 0.8))
    n = int(_opt(cfg, "samples", 101))
    if n < 1:
        raise ValidationError("--samples must be positive")
    curves = {}
    failures = {}
    if "modes" in cfg:
        gammas = np.linspace(g_lo, g_hi, n) if n > 1 else np.array([g_lo])
        for m, k in _mode_list(cfg["modes"]):
            vals = np.full(gammas.shape, np.nan)
            for i, g in enumerate(gammas):
                try:
                    vals[i] = marginal_A(m, k, float(g), p)
                except NumericalError as exc:
                    failures.setdefault(f"{m},{k}", str(exc))
            curves[(m, k)] = (gammas, vals)
    else:
        curves = curves_in_region(gamma_range=(g_lo, g_hi), p=p, n_gamma=n)
    for (m, k), (gam, A) in sorted(curves.items()):
        ok = np.isfinite(A)
        run.write_rows(f"curve_{m}_{k}.csv", ["gamma", "A"], zip(gam[ok], A[ok]))
    if failures:
        (run.out / "failures.json").write_text(json.dumps(failures, indent=2))
        run.files.append("failures.json")

    def draw(ax):
        for (m, k), (gam, A) in sorted(curves.items()):
            ax.plot(gam, A, label=f"({m},{k})")
        ax.set_xlabel("gamma")
        ax.set_ylabel("A")
        ax.legend(fontsize=8)
    run.figure("curves.png", draw)
    return 0


def cmd_eigen(cfg, run: Run):
    from .reduction import DEFAULT_CONVENTION, critical_pair
    p = params_from(cfg)
    mode = _pair(_opt(cfg, "mode", "5,1"))
    geom = CapGeometry(1.0, float(_opt(cfg, "gamma0", 0.5)))
    cp = critical_pair(p, geom, mode, _opt(cfg, "convention", DEFAULT_CONVENTION))
    run.write_rows("eigen.csv",
                   ["m", "n", "gamma", "lambda", "mu", "sigma_plus", "sigma_minus", "u0_1", "u0_2",
                    "u0s_1", "u0s_2", "Nstar", "scale"],
                   [(cp.m, cp.n, cp.gamma, cp.lam, cp.mu, cp.sigma0, cp.sigma_minus, *cp.u0, *cp.u0_star,
                     cp.Nstar, cp.scale)])
    return 0


def cmd_qp(cfg, run: Run):
    from .quasipattern import dump_csv, qp_correction
    p = params_from(cfg)
    geom = CapGeometry(1.0, float(_opt(cfg, "gamma0", 0.4915)))
    corr = qp_correction(p, geom, -1.0, int(_opt(cfg, "samples", 5)))
    dump_csv(run.path("qp_coefficients.csv"), corr)
    th = np.linspace(0.0, geom.theta_max, 201)
    x01, y01 = corr.evaluate(np.cos(th))
    run.write_rows("qp_profile.csv", ["theta", "X01", "Y01"], zip(th, x01, y01))

    def draw(ax):
        ax.plot(th, x01, label="X01")
        ax.plot(th, y01, label="Y01")
        ax.set_xlabel("theta")
        ax.legend()
    run.figure("qp_profile.png", draw)
    return 0


def _table(cfg, p, eps, samples=None):
    from .reduction import DEFAULT_CONVENTION, build_table
    window = (float(_opt(cfg, "gamma0", 0.51)), float(_opt(cfg, "gamma_end", 0.4515)))
    sched = CapSchedule(epsilon=eps, gamma0=0.5)
    return build_table(p, sched, window, samples or int(_opt(cfg, "samples", 36)),
                       _pair(_opt(cfg, "mode", "5,1")), convention=_opt(cfg, "convention", DEFAULT_CONVENTION))


def _epsilons(cfg):
    raw = cfg.get("epsilon")
    if raw is None:
        vals = list(DEFAULT_EPSILONS)
    else:
        vals = _float_list(raw) if isinstance(raw, str) else [float(v) for v in np.atleast_1d(raw)]
    if any(not v > 0 for v in vals):
        raise ValidationError("epsilon must be positive")
    cfg["epsilon"] = vals
    return vals


def cmd_nfcoef(cfg, run: Run):
    p = params_from(cfg)
    eps = _epsilons(cfg)[-1]
    table = _table(cfg, p, eps)
    table.to_csv(run.path("nf_table.csv"))
    table.to_json(run.path("nf_table.json"))
    _refinement_report(cfg, p, table, run)
    return 0


def _refinement_report(cfg, p, table, run):
    if len(table.tau) == 36:
        return
    base = _table(cfg, p, table.epsilon, 36)
    rows = []
    for name in ("sigma0", "sigma1", "C0"):
        d = np.abs(base(name, table.tau) - getattr(table, name))
        rows.append((name, float(np.max(d)), float(np.max(d) / max(1.0, np.max(np.abs(getattr(table, name)))))))
    run.write_rows("refinement.csv", ["coefficient", "sup_abs", "sup_scaled"], rows)


def cmd_nf(cfg, run: Run):
    from .nf import NfSolveConfig, integrate_nf
    p = params_from(cfg)
    epsilons = _epsilons(cfg)
    table = _table(cfg, p, epsilons[-1])
    table.to_csv(run.path("nf_table.csv"))
    _refinement_report(cfg, p, table, run)
    base = NfSolveConfig(epsilon=epsilons[0], x0=float(_opt(cfg, "x0", 0.002305)),
                         gamma_start=float(_opt(cfg, "gamma0", 0.51)),
                         gamma_end=float(_opt(cfg, "gamma_end", 0.4515)))
    trajs = {}
    for eps in epsilons:
        tr = integrate_nf(table, replace(base, epsilon=eps))
        tr.to_csv(run.path(f"nf_eps_{eps:.0e}.csv"))
        trajs[eps] = tr
    ref = next(iter(trajs.values()))
    run.write_rows("branch.csv", ["gamma", "x_branch"], zip(ref.gamma, ref.x_branch))
    run.write_rows("reach.csv", ["epsilon", "gamma_reach_half_branch"],
                   [(e, tr.first_reach(0.5)) for e, tr in trajs.items()])

    def draw(ax):
        ax.plot(ref.gamma, ref.x_branch, "k--", label="branch")
        for e, tr in trajs.items():
            ax.plot(tr.gamma, tr.x, label=f"eps={e:.0e}")
        ax.invert_xaxis()
        ax.set_xlabel("gamma")
        ax.set_ylabel("x")
        ax.legend(fontsize=8)
    run.figure("nf.png", draw)
    return 0


def sim_config(cfg):
    from .simulator import SimConfig, SimGrid
    grid = _opt(cfg, "grid", (64, 32))
    grid = _pair(grid, "grid") if isinstance(grid, str) else tuple(grid)
    kw = dict(grid=SimGrid(*grid))
    for key, name in (("dt", "dt"), ("epsilon", "epsilon"), ("gamma0", "gamma_start"),
                      ("gamma_end", "gamma_end"), ("cadence", "cadence"), ("seed", "seed"),
                      ("ic", "ic"), ("sample_every", "sample_every")):
        if key in cfg:
            kw[name] = cfg[key]
    if _opt(cfg, "affine"):
        kw["affine_mode"] = True
    if "mode" in cfg:
        kw["mode"] = _pair(cfg["mode"])
    if "track" in cfg:
        kw["track"] = tuple(_mode_list(cfg["track"]))
    if "snapshots" in cfg:
        snaps = cfg["snapshots"]
        kw["snapshot_gammas"] = tuple(_float_list(snaps) if isinstance(snaps, str) else snaps)
    try:
        sc = SimConfig(**kw)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None
    cfg["resolved_sim_config"] = sc.to_json()
    return sc


def cmd_sim(cfg, run: Run):
    from . import simulator as sim
    if _opt(cfg, "preset") == "fig8":
        return cmd_converge(cfg, run)
    p = params_from(cfg)
    sc = sim_config(cfg)
    sim.write_config(sc, run.path("sim_config.json"))
    res = sim.run(sc, p)
    sim.write_series_csv(res, run.path("series.csv"))
    for g, st in res.snapshots:
        sim.write_snapshot(st, sc.grid, run.path(f"snapshot_{g:.6f}.npz"))
    sim.write_snapshot(res.final, sc.grid, run.path("final.npz"))
    if sc.affine_mode:
        geom = CapGeometry(sc.R, res.final.gamma)
        ref_u, _ = sim.qp_reference(sc.grid, geom, p, sc.epsilon)
        theta = 2.0 * np.arctan(geom.t_half * sc.grid.w)
        # two meridians a quarter-turn of the pattern apart, as in the published comparison
        j2 = sc.grid.Nphi // 8 if sc.grid.Nphi >= 8 else 0
        run.write_rows("qp_compare.csv", ["theta", "U_phi0", "U_phi_pi4", "eps_X01"],
                       zip(theta, res.final.U[:, 0], res.final.U[:, j2], ref_u[:, 0]))
        err = sim.qp_profile_error(res.final, sc, p)
        run.write_rows("qp_error.csv", ["gamma", "sup_rel_error"], [(res.final.gamma, err)])

        def draw(ax):
            ax.plot(theta, res.final.U[:, 0], ".", label="simulation")
            ax.plot(theta, ref_u[:, 0], "-", label="series")
            ax.set_xlabel("theta")
            ax.legend()
        run.figure("qp_compare.png", draw)
    else:
        x = sim.extracted_x(res)

        def draw(ax):
            ax.plot(res.gamma, x)
            ax.invert_xaxis()
            ax.set_xlabel("gamma")
            ax.set_ylabel("x extracted")
        run.figure("series.png", draw)
    return 0


def cmd_converge(cfg, run: Run):
    from . import simulator as sim
    p = params_from(cfg)
    sc = sim_config(cfg)
    res = _float_list(_opt(cfg, "resolutions", "64,128,256"))
    tab = sim.convergence_study([(int(n), sc.grid.Nphi) for n in res], sc, p)
    tab.to_csv(run.path("convergence.csv"))
    run.write_rows("convergence_order.csv", ["norm", "slope"],
                   [("L2", tab.slope_l2), ("max", tab.slope_max)])

    def draw(ax):
        ax.loglog(tab.h, tab.err_l2, "o-", label="L2")
        ax.loglog(tab.h, tab.err_max, "s-", label="max")
        ax.set_xlabel("h")
        ax.set_ylabel("error")
        ax.legend()
    run.figure("convergence.png", draw)
    return 0


def cmd_project(cfg, run: Run):
    from . import simulator as sim
    from .reduction import DEFAULT_CONVENTION, amplitude_scale
    p = params_from(cfg)
    try:
        state, grid = sim.read_snapshot(cfg["snapshot"])
    except (OSError, KeyError, ValueError) as exc:
        raise ValidationError(f"cannot read snapshot: {exc}") from None
    mode = _pair(_opt(cfg, "mode", "5,1"))
    geom = CapGeometry(1.0, float(state.gamma))
    pr = sim.project_mode(state, grid, geom, p, mode)
    lam = degree_roots(mode[0], mode[1], geom.gamma)[mode[1] - 1]
    x = pr.amplitude * amplitude_scale(mode[0], lam, geom, _opt(cfg, "convention", DEFAULT_CONVENTION))
    run.write_rows("projection.csv", ["m", "n", "gamma", "a_cos", "a_sin", "x"],
                   [(mode[0], mode[1], geom.gamma, pr.a_cos, pr.a_sin, x)])
    return 0


COMMANDS = {
    "curves": cmd_curves, "eigen": cmd_eigen, "qp": cmd_qp, "nfcoef": cmd_nfcoef, "nf": cmd_nf,
    "sim": cmd_sim, "project": cmd_project, "converge": cmd_converge,
}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve(args)
        run = Run(args.command, args.out, cfg, args.plot)
        code = COMMANDS[args.command](cfg, run)
        run.finish()
        return code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
