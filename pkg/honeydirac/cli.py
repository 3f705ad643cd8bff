"""Command-line surface: one sub-command per analysis, each reading a JSON run config."""

import argparse
import logging
import os

import numpy as np

from . import __version__
from .config_state import load_config
from .det2 import zero_scan
from .dirac import DiracTolerances, characterize, eps_scan, unit_directions
from .lattice import build_geometry
from .output import write_csv, write_json
from .perturb import DeformationReport, deform_scan, verify_split
from .potential import potential_from_section
from .spectral import band_path, named_path
from .system_info import build_identifier

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERDICT = 4

DEFAULT_OUT = {
    "bands": "bands.csv",
    "dirac": "dirac.json",
    "perturb": "perturb.csv",
    "deform": "deform.csv",
    "det2": "det2.csv",
    "scan": "scan.csv",
}


def _setup(cfg):
    geom = build_geometry(cfg.lattice.a)
    V = potential_from_section(cfg.potential, a=geom.a, default_M=cfg.solver.M)
    return geom, V


def _honeycomb(cfg, V):
    V.require_honeycomb(cfg.tolerances.symmetry)
    return V


def cmd_bands(cfg, out):
    geom, V = _setup(cfg)
    if cfg.bands.kpoints:
        kpoints = np.array(cfg.bands.kpoints, dtype=float)
    else:
        kpoints = named_path(geom, cfg.bands.path, cfg.bands.points_per_segment)
    table = band_path(geom, V, cfg.solver.eps, cfg.solver.M, kpoints,
                      n_bands=cfg.solver.n_bands, workers=cfg.solver.workers)
    write_csv(out, table.header, table.rows())
    logger.info("wrote %d band rows to %s", len(table.kpoints), out)
    return EXIT_OK


def _directions(cfg):
    n = cfg.dirac.directions
    if not cfg.dirac.random_directions:
        return unit_directions(n)
    theta = np.random.default_rng(cfg.seed).uniform(0.0, 2.0 * np.pi, n)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _tolerances(cfg):
    t = cfg.tolerances
    return DiracTolerances(
        degeneracy=t.degeneracy, pair_match=t.pair_match, lambda_threshold=t.lambda_threshold,
        isotropy=t.isotropy, slope=t.slope, radius_fraction=t.radius_fraction,
    )


def cmd_dirac(cfg, out):
    geom, V = _setup(cfg)
    _honeycomb(cfg, V)
    report = characterize(geom, V, cfg.solver.eps, cfg.solver.M, K_star=geom.vertex(cfg.dirac.vertex),
                          tolerances=_tolerances(cfg), directions=_directions(cfg), radii=cfg.dirac.radii,
                          workers=cfg.solver.workers)
    write_json(out, report.to_dict())
    return EXIT_OK if report.verdict else EXIT_VERDICT


def cmd_perturb(cfg, out):
    geom, V = _setup(cfg)
    _honeycomb(cfg, V)
    table = verify_split(geom, V, cfg.perturb.eps_list, cfg.solver.M, workers=cfg.solver.workers)
    write_csv(out, table.header, table.as_rows())
    if table.exponents_double and not table.quadratic:
        logger.warning("splitting defects are not quadratic: exponents %s / %s",
                       table.exponents_double, table.exponents_simple)
        return EXIT_VERDICT
    return EXIT_OK


def cmd_deform(cfg, out):
    geom, V = _setup(cfg)
    _honeycomb(cfg, V)
    W = potential_from_section(cfg.deform.W, a=geom.a, default_M=cfg.solver.M)
    reports = deform_scan(geom, V, cfg.solver.eps, W, cfg.deform.etas, cfg.solver.M,
                          workers=cfg.solver.workers, closure_coeff=cfg.deform.closure_coeff)
    if out.endswith(".json"):
        write_json(out, [r.to_dict() for r in reports])
    else:
        write_csv(out, DeformationReport.csv_header, (r.csv_row() for r in reports))
    return EXIT_OK


def cmd_det2(cfg, out):
    geom, V = _setup(cfg)
    _honeycomb(cfg, V)
    scan = zero_scan(geom, V, cfg.det2.sigma, cfg.solver.eps, cfg.det2.window, cfg.det2.grid_n, cfg.solver.M)
    write_csv(out, scan.header, scan.rows())
    write_json(os.path.splitext(out)[0] + ".zeros.json", scan.to_dict())
    return EXIT_OK


def cmd_scan(cfg, out):
    geom, V = _setup(cfg)
    _honeycomb(cfg, V)
    scan = eps_scan(geom, V, cfg.scan.eps_list, cfg.solver.M, K_star=geom.vertex(cfg.dirac.vertex),
                    tolerances=_tolerances(cfg), collapse_tol=cfg.scan.collapse_tol,
                    workers=cfg.solver.workers)
    write_csv(out, scan.header, scan.as_rows())
    for lo, hi in scan.brackets:
        logger.info("crossing band pair changes between eps=%g and eps=%g", lo, hi)
    return EXIT_OK


COMMANDS = {
    "bands": (cmd_bands, "band table along a k-path (CSV)"),
    "dirac": (cmd_dirac, "Dirac point detection and cone fit (JSON)"),
    "perturb": (cmd_perturb, "small-eps splitting check (CSV)"),
    "deform": (cmd_deform, "Dirac point under eps V + eta W (CSV or JSON)"),
    "det2": (cmd_det2, "det2 zero scan against the sector spectrum (CSV + zeros JSON)"),
    "scan": (cmd_scan, "vertex eigenvalue and crossing bands along an eps ladder (CSV)"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="honeydirac",
        description="Band structure and Dirac point checks for honeycomb lattice potentials",
    )
    parser.add_argument("--version", action="version", version=build_identifier(__version__))
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON run config (defaults apply when omitted)")
        p.add_argument("--out", help=f"output path [default: {DEFAULT_OUT[name]}]")
        p.add_argument("-v", "--verbose", action="count", default=0,
                       help="-v for progress, -vv for per-solve detail")
    return parser


def run(args):
    cfg = load_config(args.config)
    handler, _ = COMMANDS[args.command]
    return handler(cfg, args.out or DEFAULT_OUT[args.command])
