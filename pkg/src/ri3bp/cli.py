"""Command-line front end.

Every subcommand writes its artifacts into ``--out`` (CSV bodies at 17
significant digits behind a ``# {json}`` header line, JSON manifests with
sorted keys) together with the effective configuration. Exit status: 0 ok,
1 usage, 2 numerical failure, 3 verification failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import DomainError, RI3BPError
from .io import artifact_header, dumps, read_csv, write_csv, write_json

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flags mapped onto RunConfig fields
_CONFIG_FLAGS = [
    ("--G", "G", float, "angular momentum of the massless body"),
    ("--G0", "G0", float, "angular momentum of the reference parabola"),
    ("--tol-int", "tol_int", float, "integrator relative tolerance"),
    ("--tol-bisect", "tol_bisect", float, "slope bisection tolerance"),
    ("--tol-newton", "tol_newton", float, "Newton gradient tolerance"),
    ("--r-far", "r_far", float, "parabolicity decision radius for tables"),
    ("--table-r-min", "table_r_min", float, "lowest table radius"),
    ("--table-r-max", "table_r_max", float, "highest table radius"),
    ("--table-n-r", "table_n_r", int, "table radii"),
    ("--table-n-t", "table_n_t", int, "table phases"),
    ("--nodes-per-period", "nodes_per_period", int, "path nodes per primary period"),
    ("--half-width-periods", "half_width_periods", int, "block half-width in periods"),
    ("--eps0", "eps0", float, "connector slope-gap target for T_min"),
    ("--eps-hyp", "eps_hyp", float, "launch excess of the hyperbolic tag"),
    ("--seed", "seed", int, "random seed"),
    ("--out", "output_dir", str, "output directory"),
]


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON config file (flags override it)")
    for flag, name, typ, hlp in _CONFIG_FLAGS:
        p.add_argument(flag, dest=name, type=typ, default=None, help=hlp)
    p.add_argument("--twobody", action="store_true", default=None,
                   help="switch the primaries off (rho = 0 test mode)")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="ri3bp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ri3bp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rho", parents=[common], help="primaries' half separation")
    p.add_argument("--t-range", type=float, nargs=2, default=(0.0, 2 * np.pi))
    p.add_argument("--n", type=int, default=201)

    p = sub.add_parser("parabola", parents=[common], help="two-body parabola samples")
    p.add_argument("--u-range", type=float, nargs=2, default=(-10.0, 10.0))
    p.add_argument("--n", type=int, default=201)

    p = sub.add_parser("table", parents=[common], help="stable-manifold generating table")

    p = sub.add_parser("splitting", parents=[common], help="splitting function samples")
    p.add_argument("--window", type=float, nargs=2, default=None)
    p.add_argument("--n", type=int, default=None)

    p = sub.add_parser("homoclinic", parents=[common], help="homoclinic by shooting")
    p.add_argument("--window", type=float, nargs=2, default=None)
    p.add_argument("--which", type=int, default=0, help="index of the simple bracket")
    p.add_argument("--refine", action="store_true", help="Newton on the reduced action")
    p.add_argument("--table", type=Path, help="table CSV from the table subcommand")

    p = sub.add_parser("mountain-pass", parents=[common], help="mountain-pass level c_G")
    p.add_argument("--images", type=int, default=21)
    p.add_argument("--iterations", type=int, default=600)
    p.add_argument("--polish-m", type=int, default=8192)
    p.add_argument("--table", type=Path)

    p = sub.add_parser("multibump", parents=[common], help="multibump orbit")
    p.add_argument("--blocks", type=int, required=True, help="number of connectors L")
    p.add_argument("--l", type=int, required=True, help="block spacing in primary periods")
    p.add_argument("--tag", choices=("parabolic", "periodic", "hyperbolic"),
                   default="parabolic")
    p.add_argument("--table", type=Path)

    p = sub.add_parser("classify", parents=[common], help="final motion of one orbit")
    p.add_argument("--mode", choices=("twobody", "full"), default="full")
    p.add_argument("--energy", type=float, help="start on this energy level at --r")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--y", type=float, default=None)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--direction", type=int, choices=(1, -1), default=1)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance criteria")
    p.add_argument("--criteria", type=int, nargs="*", default=None)
    return parser


def resolve_config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    over = {name: getattr(args, name) for _, name, _, _ in _CONFIG_FLAGS}
    over["twobody"] = args.twobody
    return cfg.replace(**over)


# ---------------------------------------------------------------------------
# helpers


def _out(cfg, name):
    return Path(cfg.output_dir) / name


def _emit(cfg, name, columns, **extra):
    return write_csv(_out(cfg, name), columns, artifact_header(cfg, artifact=name, **extra))


def _manifest(cfg, name, payload):
    return write_json(_out(cfg, name), {"header": artifact_header(cfg, artifact=name),
                                        "result": payload})


def save_table(path, table, cfg=None):
    r, t = np.meshgrid(table.r_grid, table.t_grid, indexing="ij")
    head = artifact_header(cfg, table=table.header())
    write_csv(path, {"r": r.ravel(), "t": t.ravel(), "slope": table.slopes.ravel()}, head)


def load_table(path):
    from .manifolds import GeneratingTable

    head, cols = read_csv(path)
    meta = head["table"]
    n_r = len(meta["r_grid"])
    n_t = meta["t_grid_size"]
    table = GeneratingTable(meta["G"], np.array(meta["r_grid"]), cols["t"][:n_t],
                            cols["slope"].reshape(n_r, n_t), meta["tol"], meta["r_far"],
                            meta["twobody"])
    table.cross_validation_error = meta["cross_validation_error"]
    return table


def _table_for(cfg, path=None, G=None, r_far=None):
    from .manifolds import build_table

    if path is not None:
        table = load_table(path)
        if abs(table.G - (cfg.G if G is None else G)) > 1e-14:
            raise UsageError("table was built for a different G")
        return table
    return build_table(cfg.G if G is None else G, (cfg.table_r_min, cfg.table_r_max),
                       cfg.table_n_r, cfg.table_n_t, cfg.r_far if r_far is None else r_far,
                       cfg.tol_bisect, cfg.settings())


# ---------------------------------------------------------------------------
# subcommands


def cmd_rho(cfg, args):
    from .kepler import rho, solve_kepler

    t = np.linspace(*args.t_range, args.n)
    _emit(cfg, "rho.csv", {"t": t, "u": solve_kepler(t), "rho": rho(t)})
    return EXIT_OK


def cmd_parabola(cfg, args):
    from .kepler import parabola_arrays

    u = np.linspace(*args.u_range, args.n)
    r0, r0d, r0dd = parabola_arrays(u, cfg.G)
    _emit(cfg, "parabola.csv", {"u": u, "r0": r0, "r0_dot": r0d, "r0_ddot": r0dd}, G=cfg.G)
    return EXIT_OK


def cmd_table(cfg, args):
    table = _table_for(cfg)
    save_table(_out(cfg, "table.csv"), table, cfg)
    _manifest(cfg, "table.json", table.header())
    return EXIT_OK


def cmd_splitting(cfg, args):
    from .manifolds import splitting_curve

    window = tuple(args.window) if args.window else (cfg.window_lo, cfg.window_hi)
    curve = splitting_curve(cfg.G, window, args.n or cfg.n_samples, None, cfg.tol_bisect,
                            cfg.settings())
    _emit(cfg, "splitting.csv", curve.table(), G=cfg.G, window=window)
    _manifest(cfg, "splitting.json", {"G": cfg.G, "window": window, "brackets": curve.brackets,
                                      "noise": curve.noise, "errors": curve.errors})
    return EXIT_OK


def _homoclinic(cfg, window=None, which=0):
    from .connections import find_homoclinic

    window = tuple(window) if window else (cfg.window_lo, cfg.window_hi)
    return find_homoclinic(cfg.G, window, n_samples=cfg.n_samples, tol=cfg.tol_bisect,
                           settings=cfg.settings(), which=which)


def _tails(cfg, table_path):
    from .action import TableTails, TwoBodyTails

    if cfg.twobody:
        return TwoBodyTails(cfg.G, twobody=True)
    return TableTails(_table_for(cfg, table_path))


def _newton_base(cfg, orbit, tails):
    from .connections import refine_newton
    from .kepler import TWO_PI

    seed = orbit.restrict(cfg.half_width, TWO_PI / cfg.nodes_per_period, cfg.G0)
    return refine_newton(seed, cfg.G, tails, tol=cfg.tol_newton,
                         allow_singular=cfg.twobody)


def cmd_homoclinic(cfg, args):
    orb = _homoclinic(cfg, args.window, args.which)
    tr = orb.trajectory
    _emit(cfg, "homoclinic.csv", {"t": tr.t, "r": tr.r, "y": tr.y}, G=cfg.G)
    payload = {"orbit": orb.diagnostics()}
    if args.refine:
        nr = _newton_base(cfg, orb, _tails(cfg, args.table))
        _emit(cfg, "homoclinic_path.csv", {"s": nr.path.s, "phi": nr.path.phi,
                                           "r": nr.path.radius}, path=nr.path.header())
        payload["newton"] = nr.as_dict()
    _manifest(cfg, "homoclinic.json", payload)
    return EXIT_OK


def cmd_mountain_pass(cfg, args):
    from .mountain_pass import mountain_pass

    tails = _tails(cfg, args.table)
    res = mountain_pass(cfg.G, tails=tails, G0=cfg.G0, half_width=cfg.half_width,
                        n_images=args.images, iterations=args.iterations,
                        polish_m=args.polish_m, newton_tol=cfg.tol_newton)
    p = res.path
    _emit(cfg, "mountain_pass.csv", {"s": p.s, "phi": p.phi, "r": p.radius}, path=p.header())
    _manifest(cfg, "mountain_pass.json", res.as_dict())
    return EXIT_OK


def cmd_multibump(cfg, args):
    from .multibump import Itinerary, solve_multibump

    tails = _tails(cfg, args.table)
    orb = _homoclinic(cfg)
    base = _newton_base(cfg, orb, tails)
    it = Itinerary((args.l,) * args.blocks, args.tag)
    sol = solve_multibump(it, cfg.G, base.path, tails,
                          eps_hyp=cfg.eps_hyp if args.tag == "hyperbolic" else 0.0,
                          tol=cfg.tol_newton, settings=cfg.settings(),
                          shadow_fraction=cfg.shadow_fraction, thresholds=cfg.thresholds())
    _emit(cfg, "multibump.csv", sol.table(), G=cfg.G, itinerary=it.as_dict())
    _manifest(cfg, "multibump.json", sol.manifest())
    return EXIT_OK


def cmd_classify(cfg, args):
    from .dynamics import PolarState, final_motion

    twobody = args.mode == "twobody" or cfg.twobody
    cfg = cfg.replace(twobody=twobody)
    G = cfg.G
    r = args.r if args.r is not None else max(G * G, 1.0)
    if args.energy is not None:
        y2 = 2 * args.energy + 2 / r - G * G / r**2
        if y2 < 0:
            raise UsageError("energy level not reachable at this radius")
        y = np.sqrt(y2)
    elif args.y is not None:
        y = args.y
    else:
        raise UsageError("give --energy or --y")
    lab = final_motion(PolarState(r, float(y), args.t, G), args.direction, cfg.thresholds(),
                       cfg.settings())
    _manifest(cfg, "classify.json", lab.as_dict())
    print(lab.label)
    return EXIT_OK


def cmd_verify(cfg, args):
    from .verification import Suite

    suite = Suite(seed=cfg.seed)
    results = []
    for res in suite.run_all(args.criteria):
        print(res.line(), flush=True)
        results.append(res)
    _manifest(cfg, "verify.json", [r.as_dict() for r in results])
    failed = [r for r in results if r.status == "FAIL"]
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {
    "rho": cmd_rho, "parabola": cmd_parabola, "table": cmd_table, "splitting": cmd_splitting,
    "homoclinic": cmd_homoclinic, "mountain-pass": cmd_mountain_pass,
    "multibump": cmd_multibump, "classify": cmd_classify, "verify": cmd_verify,
}


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        write_json(_out(cfg, "config.json"), cfg.to_dict())
        return COMMANDS[args.command](cfg, args)
    except RI3BPError as exc:
        print(f"ri3bp: {exc.code}: {exc}", file=sys.stderr)
        if isinstance(exc, DomainError):
            return EXIT_USAGE
        if exc.details:
            print(dumps(exc.details, indent=None), file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, OSError, ValueError, KeyError) as exc:
        print(f"ri3bp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
