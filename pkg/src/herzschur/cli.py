"""Command-line entry point.

Exit codes: 0 success, 2 the tool ran and the mathematical verdict is
negative, 1 error.  Errors are reported on stderr as JSON with a code.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .definiteness import DefinitenessError, is_cond_negative_definite, is_positive_definite, schoenberg_check
from .experiments import ExperimentError, extract_rs, linear_bound_scan, wh_combine, z_window
from .free_group import (
    BallTooLarge,
    TreeError,
    TreePortion,
    additivity_check,
    enumerate_ball,
    group_matrix,
    radial_b2_norm,
    symmetry_violations,
)
from .kernel_core import Kernel, KernelError, RadialProfile, lift_radial
from .littlewood import LittlewoodError, l_norm_upper, littlewood_split, t2_norm
from .qtransform import chi_norm, q_s_membership
from .schur_norm import SchurNormError, schur_norm
from .toeplitz import DEFAULT_T_GRID, NotBoundedError, SplitError, omega_norm, s_membership

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

WH_FAMILIES = {
    "triangular": lambda m, p: np.maximum(0.0, 1.0 - np.abs(p) / m),
    "exp-abs": lambda m, p: np.exp(-np.abs(p) / m),
}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", f"{message}\n{self.format_usage()}")


# --------------------------------------------------------------------------
# input


class Inputs:
    """Loads JSON files and remembers their digests for the manifest."""

    def __init__(self):
        self.digests: dict[str, str] = {}

    def load(self, path: str):
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise CliError("io_error", f"cannot read {path}: {exc.strerror}") from None
        self.digests[path] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CliError("malformed_json", f"{path}: {exc}") from None

    def matrix(self, path: str) -> np.ndarray:
        obj = self.load(path)
        try:
            if isinstance(obj, dict) and "entries" in obj:
                return Kernel.from_json(obj).entries
            if isinstance(obj, dict) and "re" in obj:
                return np.asarray(obj["re"], float) + 1j * np.asarray(obj.get("im", 0.0), float)
            if isinstance(obj, dict) and "matrix" in obj:
                obj = obj["matrix"]
            a = np.asarray(obj, dtype=float)
        except (KernelError, ValueError, TypeError) as exc:
            raise CliError("invalid_input", f"{path}: not a matrix ({exc})") from None
        if a.ndim != 2:
            raise CliError("invalid_input", f"{path}: expected a 2-d array, got shape {a.shape}")
        return a

    def profile(self, path: str) -> RadialProfile:
        try:
            return RadialProfile.from_json(self.load(path))
        except (KernelError, KeyError, ValueError, TypeError) as exc:
            raise CliError("invalid_input", f"{path}: not a radial profile ({exc})") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# --------------------------------------------------------------------------
# subcommands; each returns (payload, negative_verdict)


def _kernel_or_profile(args, inputs: Inputs):
    if args.profile:
        return lift_radial(inputs.profile(args.profile))
    if args.input:
        return Kernel(inputs.matrix(args.input))
    raise CliError("usage", "give --profile or --input")


def cmd_schur_norm(args, inputs):
    cert = schur_norm(inputs.matrix(args.input), tol=args.tol or 1e-6)
    return cert.to_json(with_witness=args.witness), False


def cmd_omega_norm(args, inputs):
    return omega_norm(_kernel_or_profile(args, inputs), args.n).to_json(), False


def cmd_chi_norm(args, inputs):
    return chi_norm(_kernel_or_profile(args, inputs), args.q, args.n).to_json(), False


def cmd_s_check(args, inputs):
    phi = lift_radial(inputs.profile(args.profile))
    rep = s_membership(phi, args.t_grid, args.n or 200, args.tol or 1e-8)
    return rep.to_json(), rep.verdict == "not_in_S"


def cmd_q_s_check(args, inputs):
    phi = lift_radial(inputs.profile(args.profile))
    rep = q_s_membership(phi, args.q, args.t_grid, args.n or 200, args.tol or 1e-8)
    return rep.to_json(), rep.verdict == "not_in_S"


def cmd_radial_norm(args, inputs):
    return radial_b2_norm(inputs.profile(args.profile), args.group, args.n or 200).to_json(), False


def _generators(group: str) -> int:
    if group in ("finf", "infinite"):
        raise CliError("invalid_input", "ball computations need a finite number of generators (f2, f3, ...)")
    try:
        return int(group[1:]) if group.startswith("f") else int(group)
    except ValueError:
        raise CliError("invalid_input", f"unknown group {group!r}") from None


def cmd_ball_schur(args, inputs):
    profile = inputs.profile(args.profile)
    tol = args.tol or 1e-4
    ball = enumerate_ball(_generators(args.group), args.radius)
    cert = schur_norm(group_matrix(profile, ball).entries, tol=min(tol, 1e-6))
    full = radial_b2_norm(profile, args.group, args.n or 200)
    upper = full.upper
    holds = None if upper is None else bool(cert.value <= upper + tol)
    return {"ball_size": len(ball), "radius": args.radius, "ball_schur_norm": cert.to_json(),
            "radial_b2_norm": full.to_json(), "gap": None if upper is None else upper - cert.value,
            "sandwich_holds": holds}, holds is False


def cmd_tree_check(args, inputs):
    portion = TreePortion(args.q, args.radius)
    bad = additivity_check(portion)
    asym = symmetry_violations(portion)
    size = len(portion)
    return {"q": args.q, "radius": args.radius, "vertices": size, "triples": size ** 3,
            "additivity_violations": bad, "symmetry_violations": asym}, bool(bad or asym)


def cmd_littlewood(args, inputs):
    a = inputs.matrix(args.input)
    split = littlewood_split(a)
    try:
        t2 = t2_norm(a)
    except LittlewoodError:
        t2 = None
    upper = l_norm_upper(split)
    out = {"t2_norm": t2, "split": split.to_json(), "l_norm_upper": upper,
           "t2_upper_from_split": 2 * upper}
    ok = split.supports_disjoint and (t2 is None or (upper <= t2 + 1e-12 and t2 <= 2 * upper + 1e-12))
    return out, not ok


def cmd_linear_bound_scan(args, inputs):
    rep = linear_bound_scan(inputs.profile(args.profile), args.group, args.t_grid,
                            args.n_ladder, args.window, args.tol or 1e-8)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["n", "t", "total", "tail_bound"])
        w.writerows(rep.rows())
        args.extra_outputs[args.csv] = buf.getvalue()
    return rep.to_json(), rep.status == "violation"


def cmd_extract_rs(args, inputs):
    profile = inputs.profile(args.profile)
    ball = enumerate_ball(_generators(args.group), args.radius)
    try:
        rs = extract_rs(profile, args.level, args.tol or 1e-6, ball=ball)
    except ExperimentError as exc:
        if "contractive semigroup" in str(exc):
            return {"feasible": False, "level": args.level, "message": str(exc)}, True
        raise
    out = rs.to_json()
    out["feasible"] = True
    return out, False


def cmd_wh_combine(args, inputs):
    family = WH_FAMILIES[args.family]
    res = wh_combine(family, z_window(args.radius), declared_norm=args.declared_norm, n_terms=args.terms)
    return res.to_json(), False


def cmd_definiteness(args, inputs):
    k = Kernel(inputs.matrix(args.input))
    if args.mode == "pd":
        rep = is_positive_definite(k, args.tol)
        return rep.to_json(), not rep.verdict
    if args.mode == "cnd":
        rep = is_cond_negative_definite(k, args.tol)
        return rep.to_json(), not rep.verdict
    rep = schoenberg_check(k, args.t_grid, args.tol)
    return rep.to_json(), not (rep.cnd.verdict and rep.all_pd)


COMMANDS = {
    "schur-norm": cmd_schur_norm, "omega-norm": cmd_omega_norm, "chi-norm": cmd_chi_norm,
    "s-check": cmd_s_check, "q-s-check": cmd_q_s_check, "radial-norm": cmd_radial_norm,
    "ball-schur": cmd_ball_schur, "tree-check": cmd_tree_check, "littlewood": cmd_littlewood,
    "linear-bound-scan": cmd_linear_bound_scan, "extract-rs": cmd_extract_rs,
    "wh-combine": cmd_wh_combine, "definiteness": cmd_definiteness,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--n", type=int, default=None, help="truncation size")
    common.add_argument("--t-grid", type=_floats, default=DEFAULT_T_GRID)
    common.add_argument("--q", type=int, default=3)
    common.add_argument("--radius", type=int, default=2)
    common.add_argument("--out", default=None, help="directory for the certificate and manifest")
    common.add_argument("--deterministic", action="store_true",
                        help="omit timings so repeated runs give identical files")

    parser = _Parser(prog="herzschur", description="Schur and Herz-Schur multiplier norms and certificates.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("schur-norm", "Schur multiplier norm of a matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--witness", action="store_true", help="include the block witness")
    for name, text in (("omega-norm", "functional norm from a kernel or radial profile"),
                       ("chi-norm", "q-version of omega-norm")):
        p = add(name, text)
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--profile")
        g.add_argument("--input")
    for name, text in (("s-check", "membership test over a t-grid"),
                       ("q-s-check", "q-version of s-check")):
        add(name, text).add_argument("--profile", required=True)
    p = add("radial-norm", "norm of a radial multiplier on a free group")
    p.add_argument("--profile", required=True)
    p.add_argument("--group", default="finf")
    p = add("ball-schur", "Schur norm of a radial kernel on a word ball")
    p.add_argument("--profile", required=True)
    p.add_argument("--group", default="f2")
    add("tree-check", "contraction pairs on a tree ball")
    add("littlewood", "t2 norm and Littlewood split").add_argument("--input", required=True)
    p = add("linear-bound-scan", "membership scan with a linear growth fit")
    p.add_argument("--profile", required=True)
    p.add_argument("--group", default="finf")
    p.add_argument("--n-ladder", type=_ints, default=(100, 200, 400))
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--csv", default=None, help="file name for per-t totals, written under --out")
    p = add("extract-rs", "finite-level R/S maps on a word ball")
    p.add_argument("--profile", required=True)
    p.add_argument("--group", default="f2")
    p.add_argument("--level", type=int, default=50)
    p = add("wh-combine", "combine a multiplier family on a window of Z")
    p.add_argument("--family", choices=sorted(WH_FAMILIES), default="triangular")
    p.add_argument("--declared-norm", type=float, default=1.0)
    p.add_argument("--terms", type=int, default=None)
    p = add("definiteness", "PD, CND or Schoenberg check of a kernel")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=("pd", "cnd", "schoenberg"), default="pd")
    return parser


# --------------------------------------------------------------------------
# output


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, default=_json_default, sort_keys=True, indent=2) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parameters(args) -> dict:
    skip = {"out", "extra_outputs", "command"}
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliError as exc:
        stderr.write(dumps({"error": exc.code, "message": str(exc)}))
        return EXIT_ERROR
    args.extra_outputs = {}
    inputs = Inputs()
    start = time.perf_counter()
    try:
        payload, negative = COMMANDS[args.command](args, inputs)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except BallTooLarge as exc:
        code, msg = "cap_exceeded", str(exc)
    except NotBoundedError as exc:
        code, msg = "not_bounded", str(exc)
    except (SchurNormError, SplitError) as exc:
        code, msg = "numerical_failure", str(exc)
    except (KernelError, DefinitenessError, TreeError, LittlewoodError, ExperimentError, ValueError) as exc:
        code, msg = "invalid_input", str(exc)
    else:
        code = None
    if code is not None:
        stderr.write(dumps({"error": code, "message": msg}))
        return EXIT_ERROR
    elapsed = time.perf_counter() - start

    result = {"command": args.command, "verdict_negative": negative, "result": payload}
    text = dumps(result)
    if args.out:
        out_dir = Path(args.out)
        name = args.command.replace("-", "_")
        paths = {out_dir / f"{name}.json": text}
        paths.update({out_dir / p: t for p, t in args.extra_outputs.items()})
        manifest = {"command": args.command, "input_digests": inputs.digests,
                    "parameters": _parameters(args), "tool_version": __version__,
                    "wall_time": None if args.deterministic else elapsed,
                    "output_paths": sorted(str(p) for p in paths),
                    "output_digests": {str(p): hashlib.sha256(t.encode()).hexdigest()
                                       for p, t in sorted(paths.items())}}
        try:
            for p, t in paths.items():
                write_atomic(p, t)
            write_atomic(out_dir / f"{name}.manifest.json", dumps(manifest))
        except OSError as exc:
            stderr.write(dumps({"error": "io_error", "message": str(exc)}))
            return EXIT_ERROR
    stdout.write(text)
    return EXIT_NEGATIVE if negative else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
