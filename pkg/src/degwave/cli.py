"""``degwave`` command line: spectrum, simulate, synthesize, diagnose, verify.

Exit codes: 0 success, 1 numeric or acceptance failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance, io
from .config import ConfigError, ExperimentConfig, load_config
from .diagnostics import (
    SCHEMA_VERSION,
    ExcludedAlphaError,
    admissibility,
    counting_function,
    deficiency,
    hidden_regularity_check,
    kadec_certificate,
    threshold_time,
)
from .estimators import resolve_mu
from .innerprod import QuadratureError, coupling_matrix, mu_coefficients
from .moment_control import (
    InadmissiblePotentialError,
    TargetState,
    random_decaying_target,
    regime_report,
    single_mode_target,
    synthesize_ground_state_control,
)
from .simulator import (
    ControlSignal,
    ModalState,
    StepUnderflowError,
    evolve_bilinear,
    evolve_linearized,
    rough_control,
)
from .special_functions import ZeroFindingError
from .spectrum import build_eigensystem, gap_profile

NUMERIC_ERRORS = (QuadratureError, StepUnderflowError, ZeroFindingError,
                  InadmissiblePotentialError, FloatingPointError, np.linalg.LinAlgError)


class Context:
    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self._sys = {}

    def system(self, N=None):
        N = self.cfg.N if N is None else N
        if N not in self._sys:
            self._sys[N] = build_eigensystem(self.cfg.alpha, N, self.cfg["tolerances"]["zero_tol"])
        return self._sys[N]

    def mu(self):
        preset = self.cfg["problem"]["mu"]
        if preset.startswith("table:"):
            return _table_mu(preset[len("table:"):])
        return resolve_mu(preset, self.cfg.alpha)

    def header(self, command):
        return {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config_hash": self.cfg.digest,
            "seed": self.cfg.seed,
            "alpha": self.cfg.alpha,
            "modes": self.cfg.N,
        }

    def write(self, name, doc):
        path = io.write_json(self.out / name, doc)
        print(f"wrote {path}")
        return path


def _table_mu(path):
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"[problem] mu: cannot read table {path}: {exc}") from None
    if data.shape[1] < 2 or data.shape[0] < 2 or np.any(np.diff(data[:, 0]) <= 0):
        raise ConfigError(f"[problem] mu: table {path} needs increasing x and a mu column")
    x, y = data[:, 0], data[:, 1]

    def mu(t):
        return np.interp(t, x, y)

    mu.__name__ = f"table:{path}"
    return mu


def _target(ctx: Context, sys) -> TargetState:
    t = ctx.cfg["target"]
    kind = t["kind"]
    if kind == "zero":
        return TargetState.zero(sys)
    if kind == "single-mode":
        if not 0 <= t["mode"] <= sys.N:
            raise ConfigError(f"{ctx.cfg.where('target', 'mode')}: outside 0..{sys.N}")
        return single_mode_target(sys, t["mode"], t["amplitude"], t["component"])
    if kind == "random-decaying":
        return random_decaying_target(sys, ctx.cfg.seed, t["decay"], t["scale"])
    try:
        data = np.loadtxt(t["path"], delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{ctx.cfg.where('target', 'path')}: {exc}") from None
    if data.shape != (sys.N + 1, 3):
        raise ConfigError(f"{ctx.cfg.where('target', 'path')}: expected {sys.N + 1} rows of n,Y,Z")
    return TargetState.from_arrays(sys, data[:, 1], data[:, 2])


def _plot_script(ctx, name, csv_name, xlabel, ylabel, columns="1:2"):
    if not ctx.cfg["output"]["plots"]:
        return
    text = (f"set datafile separator ','\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"
            f"plot '{csv_name}' using {columns} every ::1 with linespoints title '{ylabel}'\n")
    path = ctx.out / name
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


# --------------------------------------------------------------------------


def cmd_spectrum(ctx: Context) -> int:
    sys_ = ctx.system()
    print(f"wrote {io.write_eigen_table(sys_, ctx.out / 'eigen_table.csv')}")
    doc = ctx.header("spectrum")
    s = sys_.setup
    doc["setup"] = {"alpha": s.alpha, "kappa": s.kappa, "nu": s.nu, "bessel_order": s.bessel_order,
                    "zero_order": s.zero_order, "T0": s.T0, "k_alpha": s.k_alpha, "branch": s.branch}
    if sys_.N >= 3:
        g = gap_profile(sys_)
        io.write_csv(ctx.out / "gaps.csv", ["n", "gap"], zip(g.n.tolist(), g.gaps.tolist()))
        _plot_script(ctx, "gaps.gp", "gaps.csv", "n", "gap")
        doc["gaps"] = {"limit": g.limit, "nonincreasing": g.nonincreasing,
                       "last_gap": float(g.gaps[-1]), "gaps": g.gaps}
    n0 = ctx.cfg["tolerances"]["kadec_tail_start"]
    kadec_sys = ctx.system(max(sys_.N, n0 + 50))
    doc["kadec_modes"] = kadec_sys.N
    doc["kadec"] = kadec_certificate(kadec_sys, n0).to_dict()
    ctx.write("spectrum.json", doc)
    print(f"alpha={s.alpha:.6g} T0={s.T0:.6g} branch={s.branch} "
          f"lambda_1={sys_.lam[1]:.10g} kadec_margin={doc['kadec']['margin']:.4g}")
    return 0


def _synthesize(ctx):
    sys_ = ctx.system()
    mu = mu_coefficients(ctx.mu(), sys_, ctx.cfg["tolerances"]["quad_tol"])
    target = _target(ctx, sys_)
    res = synthesize_ground_state_control(target, mu, T=ctx.cfg.T,
                                          cutoff=ctx.cfg["tolerances"]["cutoff"])
    return sys_, mu, target, res


def cmd_synthesize(ctx: Context) -> int:
    sys_, mu, target, res = _synthesize(ctx)
    lin = evolve_linearized(res.q, mu)
    scale = float(np.max(np.abs(target.vector)))
    err = float(np.max(np.abs(lin.vector - target.vector)))
    doc = ctx.header("synthesize")
    doc.update(res.to_dict())
    doc["regime_detail"] = res.regime.to_dict()
    doc["residual_quadrature_inf"] = float(np.max(np.abs(res.residual_quadrature)))
    doc["roundtrip_abs_err"] = err
    doc["roundtrip_rel_err"] = err / scale if scale > 0 else 0.0
    io.write_control(res.q, ctx.out / "control.csv", ctx.cfg["output"]["samples"])
    print(f"wrote {ctx.out / 'control.csv'}")
    _plot_script(ctx, "control.gp", "control.csv", "t", "q")
    ctx.write("synthesis.json", doc)
    print(f"regime={res.regime.regime} T={res.problem.T:.6g} T0={res.regime.T0:.6g} "
          f"residual_inf={res.residual_inf:.3g} rank={res.effective_rank}")
    return 0


def cmd_simulate(ctx: Context) -> int:
    c = ctx.cfg["control"]
    sys_ = ctx.system()
    T = ctx.cfg.T
    if c["kind"] == "synthesized":
        _, _, _, res = _synthesize(ctx)
        p = res.q.scaled(c["scale"])
    elif c["kind"] == "rough":
        p = rough_control(T, ctx.cfg.seed, c["amplitude"], c["pieces"], c["hold"])
    else:
        p = ControlSignal.zero(T)
    M = coupling_matrix(ctx.mu(), sys_, ctx.cfg["tolerances"]["quad_tol"])
    tr = evolve_bilinear(ModalState.ground(sys_), p, M, T, ctx.cfg["tolerances"]["step_tol"])
    io.write_trajectory(tr, ctx.out / "trajectory.csv", ctx.cfg["output"]["trajectory_stride"])
    io.write_control(p, ctx.out / "control.csv", ctx.cfg["output"]["samples"])
    print(f"wrote {ctx.out / 'trajectory.csv'}\nwrote {ctx.out / 'control.csv'}")
    _plot_script(ctx, "trajectory.gp", "trajectory.csv", "t", "a_0")
    doc = ctx.header("simulate")
    doc["T"] = T
    doc["control_kind"] = c["kind"]
    doc["steps"] = tr.steps
    doc["last_change"] = tr.last_change
    doc["terminal"] = tr.terminal.to_dict()
    doc["regularity"] = hidden_regularity_check(tr, p).to_dict()
    ctx.write("terminal.json", doc)
    print(f"steps={tr.steps} |a(T)-e0|={float(np.max(np.abs(tr.terminal.a - ModalState.ground(sys_).a))):.3g}")
    return 0


def cmd_diagnose(ctx: Context) -> int:
    cfg = ctx.cfg
    sys_ = ctx.system()
    doc = ctx.header("diagnose")
    doc["threshold_time"] = threshold_time(cfg.alpha)
    doc["regime"] = regime_report(cfg.alpha, cfg.T).to_dict()
    try:
        doc["deficiency"] = deficiency(cfg.alpha)
    except ExcludedAlphaError as exc:
        doc["deficiency"] = {"excluded": str(exc)}
    except ValueError:
        doc["deficiency"] = None
    n0 = cfg["tolerances"]["kadec_tail_start"]
    big = ctx.system(max(sys_.N, n0 + 50))
    doc["kadec"] = kadec_certificate(big, n0).to_dict()
    hi = big.omega[-1]
    r = np.linspace(min(1.0, 0.5 * hi), hi, 201)[:-1]
    tab = counting_function(big, r)
    io.write_csv(ctx.out / "counting.csv", ["r", "count", "ratio"], tab.rows())
    _plot_script(ctx, "counting.gp", "counting.csv", "r", "n(r)/r", "1:3")
    doc["counting"] = {"limit": tab.limit, "max_scaled_err": float(np.max(np.abs(tab.ratio - tab.limit) * r))}
    rep = admissibility(ctx.mu(), sys_, cfg["tolerances"]["admissibility_floor"], cfg["problem"]["mu"])
    doc["admissibility"] = rep.to_dict()
    ctx.write("diagnostics.json", doc)
    print(f"T0={doc['threshold_time']:.6g} regime={doc['regime']['regime']} "
          f"kadec_margin={doc['kadec']['margin']:.4g} admissible={rep.passed}")
    return 0


def _criteria_filter(text):
    if text.strip().lower() == "all":
        return None
    try:
        return {int(v) for v in text.replace(",", " ").split()}
    except ValueError:
        raise ConfigError(f"[verify] criteria: expected 'all' or numbers, got {text!r}") from None


def cmd_verify(ctx: Context) -> int:
    v = ctx.cfg["verify"]
    opts = acceptance.SuiteOptions(seed=ctx.cfg.seed, perturb_kn=v["perturb_kn"])
    only = _criteria_filter(v["criteria"])
    results = acceptance.run_all(opts, only, echo=lambda r: print(f"{r.line()}  ({r.seconds:.2f} s)"))
    doc = acceptance.suite_document(results, opts, ctx.cfg.digest)
    ctx.write("verify.json", doc)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if doc["all_passed"] else 1


HELP = {
    "spectrum": "eigenvalue table, gap profile and Kadec report",
    "simulate": "bilinear evolution from the ground state with a regularity report",
    "synthesize": "minimum-norm control for a target near the ground state",
    "diagnose": "threshold time, regime, counting function and admissibility",
    "verify": "run the acceptance suite; exit 1 if any criterion fails",
}

COMMANDS = {
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "synthesize": cmd_synthesize,
    "diagnose": cmd_diagnose,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory (created if missing)")
    common.add_argument("--seed", metavar="INT", help="seed for generated targets and controls")
    common.add_argument("--modes", metavar="INT", help="truncation order N")
    common.add_argument("--alpha", metavar="REAL", help="degeneracy exponent in [0, 1.9]")
    common.add_argument("--time", metavar="EXPR", help="horizon, e.g. 3.5 or 1.2*T0")
    parser = argparse.ArgumentParser(
        prog="degwave",
        description="Spectra, simulation and ground-state control of the degenerate wave equation.",
        epilog="exit codes: 0 success, 1 numeric or acceptance failure, 2 configuration error",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        for flag, (sec, key) in {"alpha": ("problem", "alpha"), "modes": ("problem", "modes"),
                                 "time": ("problem", "time"), "seed": ("problem", "seed"),
                                 "out": ("output", "dir")}.items():
            val = getattr(args, flag)
            if val is not None:
                cfg.override(sec, key, val)
        ctx = Context(cfg, cfg.output_dir)
        ctx.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](ctx)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
