"""Command-line front end.

Each subcommand reads a flat JSON config (``--config``), applies the
command-line overrides and writes its results into ``--out``.  All output
files start with a metadata header carrying the tool version and the
config hash; CSV headers are ``#`` comment lines, JSON files hold them
under ``"meta"``.  Nothing time-dependent is written, so identical configs
give byte-identical files.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import VERSION, load_config
from .errors import ConfigError, QsvtWaveError

COMMANDS = ("solve", "angles", "scan", "spectrum", "energy", "power", "gauss", "verify-oracle")


# ------------------------------------------------------------------ output


class Output:
    def __init__(self, config, command):
        self.config = config
        self.command = command
        self.dir = config.out
        os.makedirs(self.dir, exist_ok=True)
        self.written = []

    def path(self, name):
        p = os.path.join(self.dir, name)
        self.written.append(name)
        return p

    @property
    def header(self):
        return self.config.header(self.command)

    def json(self, name, payload):
        body = {"meta": {"version": VERSION, "command": self.command,
                         "config_sha256": self.config.digest()}}
        body.update(payload)
        with open(self.path(name), "w") as fh:
            json.dump(_plain(body), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def csv(self, name, columns, rows):
        lines = [f"# {h}" for h in self.header] + [",".join(columns)]
        lines += [",".join(_cell(v) for v in row) for row in rows]
        with open(self.path(name), "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def plot(self, name, body):
        if not self.config.plots:
            return
        lines = [f"# {h}" for h in self.header] + body
        with open(self.path(name), "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _gnuplot_csv(title, xlabel, ylabel, datafile, series):
    body = ["set datafile separator ','", f"set title '{title}'", f"set xlabel '{xlabel}'",
            f"set ylabel '{ylabel}'", "set key outside"]
    parts = [f"'{datafile}' using {x}:{y} with {style} title '{lab}'"
             for x, y, style, lab in series]
    body.append("plot " + ", \\\n     ".join(parts))
    return body


# ----------------------------------------------------------------- helpers


def _problem(cfg, n_x=None):
    from .wave import WaveProblem

    return WaveProblem.from_case(cfg.n_x if n_x is None else n_x, cfg.Lx_kx0, cfg.eps0, cfg.eps1)


def _solve(cfg):
    from .qsp import inverse_phases
    from .qsvt import encoded_kappa, invert_apply, make_oracle

    problem = _problem(cfg)
    enc = make_oracle(problem, cfg.oracle)
    if cfg.kappa_qsvt > 0:
        kq = cfg.kappa_qsvt
    else:
        kq = cfg.kappa_factor * encoded_kappa(problem, enc.normalization)
    phases = inverse_phases(kq, cfg.eps_qsvt)
    record = invert_apply(problem, phases, cfg.oracle, cfg.method, encoding=enc)
    return problem, phases, record


def _field_rows(record):
    rows = []
    q, c = record.quantum, record.classical
    for j in range(len(q.E)):
        rows.append([j, q.E[j].real, q.E[j].imag, q.B[j].real, q.B[j].imag,
                     c.E[j].real, c.E[j].imag, c.B[j].real, c.B[j].imag])
    return rows


FIELD_COLUMNS = ["j", "re_E_qsvt", "im_E_qsvt", "re_B_qsvt", "im_B_qsvt",
                 "re_E_classical", "im_E_classical", "re_B_classical", "im_B_classical"]


def _phase_meta(cfg, command):
    return {"tool": f"qsvtwave {VERSION}", "command": command, "config_sha256": cfg.digest()}


# ---------------------------------------------------------------- commands


def cmd_solve(cfg, out):
    from .qsp import write_phases

    problem, phases, record = _solve(cfg)
    out.csv("fields.csv", FIELD_COLUMNS, _field_rows(record))
    write_phases(out.path("phases.csv"), phases, _phase_meta(cfg, "solve"))
    report = record.metadata()
    report.update({"n_x": problem.n_x, "omega": problem.omega, "eps0": problem.eps0,
                   "eps1": problem.eps1, "threshold": 10.0 * cfg.eps_qsvt})
    warnings = []
    if record.errors.max_abs > 10.0 * cfg.eps_qsvt:
        warnings.append(f"no convergence: max-abs error {record.errors.max_abs:.3e} exceeds "
                        f"10*eps_qsvt = {10.0 * cfg.eps_qsvt:.1e} "
                        f"(kappa_qsvt/kappa_enc = {record.kappa_qsvt / record.meta['kappa_enc']:.3g})")
    report["warnings"] = warnings
    out.json("report.json", report)
    out.plot("fields.gp", _gnuplot_csv("E field: QSVT vs classical", "j", "Re E", "fields.csv",
                                       [(1, 2, "points", "QSVT"), (1, 6, "lines", "classical")]))
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return report


def cmd_angles(cfg, out):
    from .qsp import gaussian_phases, inverse_phases, qsp_eval, write_phases

    if cfg.kappa_qsvt <= 0:
        raise ConfigError("angles needs an explicit kappa_qsvt > 0")
    pv = inverse_phases(cfg.kappa_qsvt, cfg.eps_qsvt)
    write_phases(out.path("phases_inverse.csv"), pv, _phase_meta(cfg, "angles"))
    gv, _ = gaussian_phases(cfg.mu, cfg.beta_sc, cfg.eps_qsvt, x_c=cfg.x_c)
    write_phases(out.path("phases_gauss.csv"), gv, _phase_meta(cfg, "angles"))
    s = np.linspace(-1.0, 1.0, 401)
    p = qsp_eval(pv, s).real
    out.csv("response_inverse.csv", ["s", "re_p"], zip(s.tolist(), p.tolist()))
    out.plot("response_inverse.gp", _gnuplot_csv("inverse polynomial", "s", "Re p",
                                                 "response_inverse.csv",
                                                 [(1, 2, "lines", "Re p")]))
    report = {"inverse": {"n_pol": pv.n_pol, "residual": pv.residual, "beta_sc": pv.beta_sc},
              "gauss": {"n_pol": gv.n_pol, "residual": gv.residual}}
    out.json("angles.json", report)
    return report


def _scan_point(args):
    kind, a, b, with_solve, cfg_dict = args
    if kind == "nx":
        from .wave import WaveProblem, condition

        p = WaveProblem.from_case(a, cfg_dict["Lx_kx0"], cfg_dict["eps0"], cfg_dict["eps1"])
        return {"n_x": a, "N_x": p.N_x, "kappa": condition(p)}
    from .cheb import inverse_target

    series, beta = inverse_target(a, b)
    row = {"kappa": a, "eps": b, "n_pol": series.degree, "beta_sc": beta}
    if with_solve:
        from .config import config_from_dict

        cfg = config_from_dict(dict(cfg_dict, kappa_qsvt=a, eps_qsvt=b))
        _, _, rec = _solve(cfg)
        row["error_max_abs"] = rec.errors.max_abs
    return row


def cmd_scan(cfg, out, solve=False):
    from .qsp import scan_fits

    d = cfg.as_dict()
    if cfg.axis == "nx":
        points = [("nx", n, None, False, d) for n in cfg.n_x_values]
    elif cfg.axis == "kappa":
        points = [("kappa", float(k), cfg.eps_qsvt, solve, d) for k in cfg.kappas]
    else:
        k0 = cfg.kappa_qsvt if cfg.kappa_qsvt > 0 else cfg.kappas[0]
        points = [("eps", float(k0), float(e), solve, d) for e in cfg.epses]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_scan_point, points))
    else:
        rows = [_scan_point(p) for p in points]
    if cfg.axis == "nx":
        x = np.log([r["N_x"] for r in rows])
        y = np.log([r["kappa"] for r in rows])
        fits = {"kappa_vs_Nx_exponent": float(np.polyfit(x, y, 1)[0]) if len(rows) > 1 else None}
        out.csv("scan_nx.csv", ["n_x", "N_x", "kappa"],
                [[r["n_x"], r["N_x"], r["kappa"]] for r in rows])
        out.plot("scan_nx.gp", ["set logscale xy"] + _gnuplot_csv(
            "condition number", "N_x", "kappa", "scan_nx.csv", [(2, 3, "linespoints", "kappa")]))
    else:
        fits = scan_fits(rows)
        cols = ["kappa", "eps", "n_pol", "beta_sc"] + (["error_max_abs"] if solve else [])
        out.csv(f"scan_{cfg.axis}.csv", cols, [[r[c] for c in cols] for r in rows])
        xcol = 1 if cfg.axis == "kappa" else 2
        out.plot(f"scan_{cfg.axis}.gp", ["set logscale x"] + _gnuplot_csv(
            "number of phases", cfg.axis, "N_pol", f"scan_{cfg.axis}.csv",
            [(xcol, 3, "linespoints", "N_pol")]))
        if cfg.axis == "eps" and len(rows) >= 3:
            x = np.log([1.0 / r["eps"] for r in rows])
            yv = np.array([r["n_pol"] for r in rows], dtype=float)
            slope, icpt = np.polyfit(x, yv, 1)
            resid = yv - (slope * x + icpt)
            tot = float(np.sum((yv - yv.mean()) ** 2))
            fits["log_eps_slope"] = float(slope)
            fits["log_eps_r2"] = 1.0 - float(np.sum(resid**2)) / tot if tot > 0 else 1.0
        if solve and len(rows) >= 2 and cfg.axis == "eps":
            errs = np.array([r["error_max_abs"] for r in rows])
            eps = np.array([r["eps"] for r in rows])
            fits["error_vs_eps_exponent"] = float(np.polyfit(np.log(eps), np.log(errs), 1)[0])
    report = {"axis": cfg.axis, "rows": rows, "fits": fits}
    out.json("scan.json", report)
    return report


def cmd_spectrum(cfg, out):
    from .measure import classical_fft_reference, field_state, spectrum
    from .wave import classical_solve

    problem = _problem(cfg)
    if cfg.source == "qsvt":
        _, _, rec = _solve(cfg)
        psi = rec.psi_x
    else:
        psi = classical_solve(problem).psi
    res = spectrum(field_state(psi, problem.n_x), cfg.half, problem.dx)
    E = psi[: problem.N_x]
    ref = classical_fft_reference(E, problem.dx, cfg.half)
    rows = [[k, p, r] for k, p, r in zip(res.k.tolist(), res.probabilities.tolist(),
                                         ref.probabilities.tolist())]
    out.csv("spectrum.csv", ["k", "p_qft", "p_fft"], rows)
    out.plot("spectrum.gp", _gnuplot_csv("wave-number spectrum", "k", "probability",
                                         "spectrum.csv", [(1, 2, "boxes", "QFT"),
                                                          (1, 3, "points", "FFT")]))
    k0 = problem.omega * math.sqrt(problem.eps0)
    report = {"half": cfg.half, "source": cfg.source, "p_select": res.p_select,
              "top_bins": res.top(4, nonnegative=True), "k_x0": k0,
              "bin_k_x0": res.nearest_bin(k0), "bin_sqrt_eps1_k_x0":
              res.nearest_bin(k0 * math.sqrt(problem.eps1 / problem.eps0)),
              "qft_vs_fft_max_diff": float(np.max(np.abs(res.probabilities - ref.probabilities)))}
    out.json("spectrum.json", report)
    return report


def cmd_energy(cfg, out):
    from .measure import field_energy

    _, _, rec = _solve(cfg)
    res = field_energy(rec, cfg.half, cfg.n_y, simplified=True, shots=cfg.shots, seed=cfg.seed)
    res.ae.write_csv(out.path("ae_distribution.csv"), cfg.header("energy"))
    report = res.as_dict()
    report["within_delta"] = abs(res.energy - res.classical) <= res.delta
    out.json("energy.json", report)
    out.plot("ae_distribution.gp", _gnuplot_csv("AE outcome distribution", "i_y", "probability",
                                                "ae_distribution.csv",
                                                [(1, 3, "boxes", "P(i_y)")]))
    return report


def cmd_power(cfg, out):
    from .measure import absorbed_power
    from .wave import classical_solve

    problem = _problem(cfg)
    if cfg.source == "qsvt":
        _, _, rec = _solve(cfg)
        E = rec.quantum.E * rec.nu
        field_eps = cfg.eps_qsvt
    else:
        E = classical_solve(problem).E
        field_eps = 0.0
    res = absorbed_power(E, cfg.k_B, cfg.N_EB, cfg.N_hw, cfg.filter, cfg.mu, cfg.eps_qsvt,
                         cfg.beta_sc, field_eps=field_eps)
    report = res.as_dict()
    report["D_bruteforce"] = [res.D_bruteforce.real, res.D_bruteforce.imag]
    report["abs_error"] = abs(res.D_abs - abs(res.D_bruteforce))
    report["within_tolerance"] = report["abs_error"] <= 5.0 * res.tolerance + 1e-12
    out.json("power.json", report)
    out.csv("window_gauss.csv", ["j", "G"], [[j, g] for j, g in enumerate(res.gauss.tolist())])
    return report


def cmd_gauss(cfg, out):
    from .measure import gaussian_qsvt, lobe_width, two_gaussians_demo

    run = gaussian_qsvt(cfg.n_x, cfg.mu, cfg.beta_sc, cfg.x_c, cfg.eps_qsvt)
    out.csv("gauss.csv", ["x", "qsvt", "exact"],
            [[x, v, t] for x, v, t in zip(run.x.tolist(), run.values.tolist(),
                                          run.target.tolist())])
    out.plot("gauss.gp", _gnuplot_csv("Gaussian from QSVT", "x", "G", "gauss.csv",
                                      [(1, 2, "points", "QSVT"), (1, 3, "lines", "exact")]))
    report = {"max_deviation": run.max_deviation, "n_pol": run.phases.n_pol,
              "width": lobe_width(run.x, run.values)}
    if cfg.two_gaussians:
        tg = two_gaussians_demo(cfg.n_x, cfg.mu, cfg.eps_qsvt, cfg.n_y, cfg.beta_sc,
                                cfg.shots, cfg.seed)
        report["two_gaussians"] = tg.as_dict()
        out.csv("two_gaussians.csv", ["x", "profile"],
                [[x, p] for x, p in zip(tg.x.tolist(), tg.profile.tolist())])
    out.json("gauss.json", report)
    return report


def cmd_verify_oracle(cfg, out):
    from .blockencode import dilation_oracle, structured_oracle
    from .wave import build_matrix

    problem = _problem(cfg)
    A, _ = build_matrix(problem)
    enc = structured_oracle(problem) if cfg.oracle == "structured" else dilation_oracle(problem)
    report = enc.report(A / enc.normalization)
    report["n_qubits"] = enc.n_system + sum(s for _, s in enc.ancilla)
    report["gates"] = len(enc.circuit) if enc.circuit is not None else 0
    out.json("oracle.json", report)
    return report


HANDLERS = {"solve": cmd_solve, "angles": cmd_angles, "scan": cmd_scan,
            "spectrum": cmd_spectrum, "energy": cmd_energy, "power": cmd_power,
            "gauss": cmd_gauss, "verify-oracle": cmd_verify_oracle}


# -------------------------------------------------------------------- main


def build_parser():
    parser = argparse.ArgumentParser(prog="qsvtwave",
                                     description="QSVT solver for a 1D wave problem")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat JSON config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="RNG seed for sampling modes")
        p.add_argument("--oracle", choices=("dilation", "structured"))
        if name == "scan":
            p.add_argument("--axis", choices=("kappa", "eps", "nx"))
            p.add_argument("--solve", action="store_true",
                           help="also run the QSVT solve at each sweep point")
    return parser


def run(argv=None):
    """Parse ``argv``, run the command and return the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.out = args.out
        if args.seed is not None:
            cfg.seed = args.seed
        if args.oracle is not None:
            cfg.oracle = args.oracle
        if getattr(args, "axis", None):
            cfg.axis = args.axis
        cfg.validate()
        out = Output(cfg, args.command)
        if args.command == "scan":
            report = cmd_scan(cfg, out, solve=args.solve)
        else:
            report = HANDLERS[args.command](cfg, out)
    except QsvtWaveError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    summary = {k: v for k, v in report.items() if not isinstance(v, (list, dict))}
    print(json.dumps(_plain(summary), sort_keys=True))
    print(f"wrote {', '.join(out.written)} to {out.dir}")
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
