"""Command line front end: ``linfwidth <subcommand> [options]``.

Options come from three layers, later ones winning: built-in defaults, a
JSON object given with ``--config``, explicit flags. Reports go to stdout, or
to ``--out DIR`` together with per-family CSV tables and any certificates.

Exit codes: 0 success, 2 precondition violation, 3 bound miss, 4 falsification.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

HELP = {
    "lemmas": "exact signed-permutation identities and averaging bounds",
    "foam-sweep": "level-set area to volume ratio of the eigenfunction foam",
    "foam-union": "random union process on the grid torus",
    "kinematic": "shift integrals against closed-form oracles",
    "avoid": "axis-line avoidance for small surfaces in the unit cube",
    "tower": "separator tower over a foam plus nerve-map queries",
    "width-highcodim": "surface to 1-complex certificate via a posed separator",
    "width-codim1": "cube decomposition checks and three-plane skeleton certificate",
    "essential-curve": "search for a Z/2-nontrivial cycle inside one cube",
    "gen-mesh": "write an icosphere, torus or perturbed sphere",
}

# options whose default is None (or a list) need an explicit parser
_TYPES = {"lam": float, "mesh": str, "scale": float, "side": float, "max_steps": int, "max_cubes": int}


def _flag_type(key, default):
    if key in _TYPES:
        return _TYPES[key], None
    if isinstance(default, bool):
        return (lambda s: s.lower() in ("1", "true", "yes")), None
    if isinstance(default, list):
        return type(default[0]), "+"
    return type(default), None


def build_parser(defaults: dict) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="linfwidth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for cmd, opts in defaults.items():
        sp = sub.add_parser(cmd, help=HELP.get(cmd))
        sp.add_argument("--config", help="JSON file of options (flags override it)")
        sp.add_argument("--out", help="directory for report.txt, CSV tables and certificates")
        sp.add_argument("--threads", type=int, help="cap on numerical library worker threads")
        for key, default in opts.items():
            typ, nargs = _flag_type(key, default)
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, nargs=nargs, default=None,
                            help=f"default: {default!r}")
    return p


def _load_config(path) -> dict:
    from .errors import PreconditionError
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise PreconditionError(f"unreadable config {path}: {e}") from e
    if not isinstance(data, dict):
        raise PreconditionError("config file must hold a JSON object")
    return data


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    # peek at --threads before numpy is imported so the cap reaches BLAS
    for i, a in enumerate(argv):
        val = a.split("=", 1)[1] if a.startswith("--threads=") else (
            argv[i + 1] if a == "--threads" and i + 1 < len(argv) else None)
        if val is not None and val.isdigit():
            for var in _THREAD_VARS:
                os.environ.setdefault(var, val)

    from . import scenarios
    from .errors import LinfWidthError

    args = build_parser(scenarios.DEFAULTS).parse_args(argv)
    try:
        overrides = _load_config(args.config) if args.config else {}
        flags = {k: v for k, v in vars(args).items()
                 if k in scenarios.DEFAULTS[args.command] and v is not None}
        overrides.update(flags)
        rep, artifacts = scenarios.run(args.command, overrides)
    except LinfWidthError as e:
        print(f"linfwidth {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    if args.out:
        out = Path(args.out)
        rep.write(out)
        for name, text in artifacts.items():
            (out / name).write_text(text)
        print(f"{out / 'report.txt'}: {len(rep.records)} records, {len(rep.failures)} failures")
    else:
        sys.stdout.write(rep.text())
    for r in rep.failures:
        print(f"FAIL {r.family}/{r.name}: {r.line()}", file=sys.stderr)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
