"""Command-line front end: ``bogoscope <subcommand> ...``.

Every subcommand prints one JSON object on stdout.  CSV files are written
atomically (temporary file in the target directory, then rename) with
shortest round-trip float formatting.  Exit status is 0 on success, 1 on a
domain error and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bogoliubov as bog
from . import exact_diag as ed
from . import gaussian_variational as gv
from . import hfb
from . import improved_bogoliubov as ib
from . import spectrum as sp
from .errors import DomainError
from .model import (FIGURE_SPACING, V1, V2, DispersionTable, LatticeSpec, load_config)


# --------------------------------------------------------------------------
# output helpers

def _num(x):
    """JSON-safe number: non-finite values become null."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    target_dir = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=target_dir, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, header, rows) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    n = 0
    for r in rows:
        w.writerow([_cell(x) for x in r])
        n += 1
    atomic_write(path, buf.getvalue())
    return n


def _emit(obj, out=None):
    text = json.dumps(obj, sort_keys=True, ensure_ascii=False, allow_nan=False)
    (out or sys.stdout).write(text + "\n")


def _phys(lat: LatticeSpec, k):
    return [float(c) * lat.spacing for c in k]


def _pcols(d):
    return [f"p{i + 1}" for i in range(d)]


def _lattice_json(lat: LatticeSpec):
    return {"dim": lat.d, "side_length": lat.L, "cutoff": lat.cutoff}


# --------------------------------------------------------------------------
# subcommands

def cmd_dispersion(args):
    cfg = load_config(args.config)
    lat, v = cfg.lattice, cfg.potential
    table = bog.dispersion_table(lat, v, args.rho_lambda)
    rows = ([*_phys(lat, k), lat.norm(k), e] for k, e in table.items())
    n = write_csv(args.out, _pcols(lat.d) + ["abs_p", "e_p"], rows)
    return {"command": "dispersion", "out": str(args.out), "rows": n, "lattice": _lattice_json(lat)}


def cmd_ebog(args):
    cfg = load_config(args.config)
    lat, v = cfg.lattice, cfg.potential
    direct, alt, _ = bog.bogoliubov_energy_forms(lat, v, args.rho_lambda)
    bog.bogoliubov_energy(lat, v, args.rho_lambda)  # consistency check
    dens = bog.energy_density_integral(v, lat.d, args.rho_lambda)
    return {"command": "ebog", "ebog_sum": direct, "ebog_alt": alt, "density_integral": dens,
            "lattice": _lattice_json(lat)}


def _bog_table(args):
    cfg = load_config(args.config)
    return cfg.lattice, bog.dispersion_table(cfg.lattice, cfg.potential, args.rho_lambda)


def cmd_enumerate(args):
    lat, table = _bog_table(args)
    levels = sp.enumerate_excitations(table, args.kappa, args.max_n)
    rows = ([*_phys(lat, p), e, n] for p, e, n in levels.rows())
    n = write_csv(args.out, _pcols(lat.d) + ["energy", "n_quasiparticles"], rows)
    return {"command": "enumerate", "out": str(args.out), "rows": n, "kappa": args.kappa,
            "max_n": args.max_n}


def cmd_hull(args):
    lat, table = _bog_table(args)
    h = sp.hull_table(table, args.max_n, args.window)
    return {"command": "hull", "max_n": args.max_n, "window": args.window,
            "hull": [{"p": list(p), "value": _num(e)} for p, e in h.items()]}


def cmd_gap(args):
    lat, table = _bog_table(args)
    h = sp.hull_table(table, args.max_n, args.window)
    return {"command": "gap", "gap": _num(sp.energy_gap(h))}


def cmd_cvel(args):
    lat, table = _bog_table(args)
    h = sp.hull_table(table, args.max_n, args.window)
    return {"command": "cvel", "critical_velocity": _num(sp.critical_velocity(h))}


def cmd_ibog(args):
    cfg = load_config(args.config)
    st = ib.initial_state(cfg.lattice, cfg.potential, args.kappa_c)
    sol = ib.solve(st, args.gamma, max_iter=args.max_iter)
    co = sol.coefficients
    lat = cfg.lattice
    rows = ([*_phys(lat, k), float(f), float(abs(g)), float(D), float(abs(o))]
            for k, f, g, D, o in zip(sol.state.modes, co.f, co.g, co.D, co.O))
    n = write_csv(args.out, _pcols(lat.d) + ["f", "abs_g", "D", "abs_O"], rows)
    r_lin, r_o = ib.residuals(sol.state, co.mu)
    return {"command": "ibog", "out": str(args.out), "rows": n, "mu": co.mu, "B": co.B,
            "iterations": sol.iterations, "residual_linear": r_lin, "residual_O": r_o,
            "constraint_residual": sol.state.constraint_residual()}


def cmd_hfb(args):
    cfg = load_config(args.config)
    lat = cfg.lattice
    if args.kernel == "separable":
        K = hfb.separable_kernels(lat, args.g, args.width)
    else:
        K = hfb.kernels_from_local_potential(cfg.potential, lat)
    tau = hfb.kinetic_samples(lat, args.mu, K.modes)
    states = {}
    if args.branch in ("normal", "both"):
        states["normal"] = hfb.normal_solution(K, tau)
    if args.branch in ("super", "both"):
        seed = hfb.seed_state(K, tau, args.eps0)
        states["super"] = hfb.superconducting_iteration(seed, K, args.damping)
    rows = []
    summary = {"command": "hfb", "branch": args.branch, "mu": args.mu, "kernel": args.kernel,
               "B_normal": None, "B_super": None}
    for name, st in states.items():
        gf = hfb.gap_functions(st, K)
        summary[f"B_{name}"] = gf.B
        for k, dl, xi, D in zip(st.modes, gf.delta, gf.xi, gf.D):
            rows.append([name, *_phys(lat, k), float(dl), float(xi), float(D)])
    main = states.get("super", states.get("normal"))
    disp = hfb.hfb_dispersion(main, K)
    summary["gap"] = _num(sp.energy_gap(disp))
    try:
        summary["critical_velocity"] = _num(sp.critical_velocity(disp))
    except DomainError:
        summary["critical_velocity"] = None
    summary["out"] = str(args.out)
    summary["rows"] = write_csv(args.out, ["branch"] + _pcols(lat.d) + ["delta", "xi", "D"], rows)
    return summary


def cmd_beliaev(args):
    path = Path(args.ham)
    if not path.exists():
        raise DomainError(f"coefficient file {path} not found")
    H = gv.parse_hamiltonian(path.read_text())
    res = gv.minimize(H, args.family, seed=args.seed, restarts=args.restarts,
                      workers=args.threads, return_result=True)
    nk, no, D, psd = gv.beliaev_certificate(H, res.frame)
    Dh = 0.5 * (D + D.conj().T)
    out = {"command": "beliaev", "family": args.family, "seed": args.seed,
           "restarts": args.restarts, "B": res.B, "norm_K": nk, "norm_O": no,
           "min_eig_D": float(np.min(np.linalg.eigvalsh(Dh))), "psd": psd,
           "gradient_norm": res.gradient_norm}
    if args.oracle_cutoff is not None:
        out["oracle_E0"] = gv.fock_oracle(H, args.oracle_cutoff).E0
    return out


def cmd_ed(args):
    cfg = load_config(args.config)
    v = cfg.potential.scaled(args.g) if args.g != 1.0 else cfg.potential
    rep = ed.compare_with_bogoliubov(args.n, cfg.lattice, v, args.max_level, workers=args.threads)
    rows = ([" ".join(map(str, P)), j, kn, _num(kb) if math.isfinite(kb) else "inf",
             d if math.isfinite(d) else "inf"] for P, j, kn, kb, d in rep.rows)
    n = write_csv(args.out, ["P", "j", "K_N", "K_Bog", "diff"], rows)
    return {"command": "ed", "out": str(args.out), "rows": n, "N": rep.N, "E_N": rep.E_N,
            "prediction": rep.prediction, "deviation": rep.deviation,
            "lemma_lower": rep.lower_bound, "lemma_upper": rep.upper_bound,
            "lemma_lower_ok": rep.lemma_lower_ok, "lemma_upper_ok": rep.lemma_upper_ok}


FIGURES = {
    # which: (potential, cutoff, kappa, max_n)
    "rys1": (V1, 2.0, 4.0, 4),
    "rotons": (V2, 4.0, None, 3),
    "fermi": (None, 2.0, 3.0, 4),
}


def cmd_figures(args):
    pot, cutoff, kappa, max_n = FIGURES[args.which]
    cutoff = args.cutoff if args.cutoff is not None else cutoff
    max_n = args.max_n if args.max_n is not None else max_n
    lat = LatticeSpec.from_spacing(1, FIGURE_SPACING, cutoff)
    meta = {"command": "figures", "figure": args.which, "spacing": FIGURE_SPACING,
            "cutoff": cutoff, "max_n": max_n}
    if args.which == "fermi":
        omega = DispersionTable.from_function(
            lat, lambda k: sp.free_fermi_dispersion(args.mu, k, lat))
        kappa = args.kappa if args.kappa is not None else kappa
        levels = sp.enumerate_excitations(omega, kappa, max_n, statistics="fermionic")
        rows = ([_phys(lat, p)[0], pt.energy, pt.n_quasiparticles, pt.parity]
                for p in levels.momenta() for pt in levels.levels[p])
        header = ["p", "energy", "n_quasiparticles", "parity"]
        meta["mu"] = args.mu
    else:
        v = pot.scaled(args.rho_lambda) if args.rho_lambda != 1.0 else pot
        table = bog.dispersion_table(lat, v)
        if kappa is None:
            kappa = max(e for _, e in table.items())
        kappa = args.kappa if args.kappa is not None else kappa
        levels = sp.enumerate_excitations(table, kappa, max_n)
        rows = ([_phys(lat, p)[0], e, n] for p, e, n in levels.rows())
        header = ["p", "energy", "n_quasiparticles"]
        meta["rho_lambda"] = args.rho_lambda
    meta["kappa"] = kappa
    meta["out"] = str(args.out)
    meta["rows"] = write_csv(args.out, header, rows)
    return meta


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bogoscope", description="Bogoliubov-theory toolkit.")
    p.add_argument("--threads", type=int, default=1, help="worker pool size")
    sub = p.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, fn, help_, config=True, out=False, rho=False, hull=False):
        s = sub.add_parser(name, help=help_)
        if config:
            s.add_argument("--config", required=True)
        if out:
            s.add_argument("--out", required=True)
        if rho:
            s.add_argument("--rho-lambda", type=float, default=1.0)
        if hull:
            s.add_argument("--max-n", type=int, default=6)
            s.add_argument("--window", type=int, default=None)
        s.add_argument("--threads", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        s.set_defaults(func=fn)
        return s

    add("dispersion", cmd_dispersion, "elementary excitation table", out=True, rho=True)
    add("ebog", cmd_ebog, "Bogoliubov ground-state energy", rho=True)
    s = add("enumerate", cmd_enumerate, "multi-quasiparticle spectrum", out=True, rho=True)
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--max-n", type=int, default=6)
    add("hull", cmd_hull, "subadditive hull of e_p", rho=True, hull=True)
    add("gap", cmd_gap, "energy gap", rho=True, hull=True)
    add("cvel", cmd_cvel, "critical velocity", rho=True, hull=True)
    s = add("ibog", cmd_ibog, "improved Bogoliubov fixed point", out=True)
    s.add_argument("--kappa-c", type=float, default=1.0)
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--max-iter", type=int, default=10_000)
    s = add("hfb", cmd_hfb, "BCS/HFB gap equation", out=True)
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--branch", choices=("normal", "super", "both"), default="both")
    s.add_argument("--kernel", choices=("local", "separable"), default="local")
    s.add_argument("--g", type=float, default=1.0, help="separable kernel strength")
    s.add_argument("--width", type=float, default=1.0, help="separable kernel width")
    s.add_argument("--damping", type=float, default=0.5)
    s.add_argument("--eps0", type=float, default=1e-3)
    s = add("beliaev", cmd_beliaev, "Gaussian-state minimization certificate", config=False)
    s.add_argument("--ham", required=True)
    s.add_argument("--family", choices=gv.FAMILIES, required=True)
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--oracle-cutoff", type=int, default=None)
    s = add("ed", cmd_ed, "exact diagonalization against Bogoliubov", out=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--max-level", type=int, default=3)
    s.add_argument("--g", type=float, default=1.0, help="potential scale factor")
    s = add("figures", cmd_figures, "figure data", config=False, out=True)
    s.add_argument("--which", choices=tuple(FIGURES), required=True)
    s.add_argument("--cutoff", type=float, default=None)
    s.add_argument("--kappa", type=float, default=None)
    s.add_argument("--max-n", type=int, default=None)
    s.add_argument("--rho-lambda", type=float, default=1.0)
    s.add_argument("--mu", type=float, default=1.0, help="Fermi level for --which fermi")
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        stderr.write("bogoscope: error: --threads must be positive\n")
        return 2
    try:
        result = args.func(args)
    except DomainError as exc:
        stderr.write(f"bogoscope: {exc}\n")
        return 1
    except OSError as exc:
        stderr.write(f"bogoscope: {exc}\n")
        return 1
    _emit(result, stdout)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
