"""Command-line front end: every analysis as a subcommand with JSON/CSV output.

Reports are deterministic: identical input documents and seeds produce
byte-identical output (keys are sorted, no timestamps or paths are embedded).
Output files are written atomically (temp file + rename). Set the
``MUCHAN_THREADS`` environment variable before the interpreter imports numpy
to cap BLAS parallelism; the entry point forwards it to the usual thread-count
variables as a best effort.
"""

from __future__ import annotations

import os

_threads = os.environ.get("MUCHAN_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import sys
import tempfile
from typing import List, Optional, Tuple

import numpy as np

from .channels import (
    Channel,
    InvalidChannelError,
    ParseError,
    channel_from_dict,
    matrix_from_lists,
    matrix_to_lists,
    verify,
)
from .config import RunConfig, parse_grid
from .dynamics import (
    InvalidGeneratorError,
    eventual_mu_scan,
    generator_from_dict,
    scan_to_csv,
    scan_to_dict,
    validate_generator,
)
from .mucone import (
    decomposition_to_dict,
    fw_decompose,
    transpose_witness,
    witness_search,
    witness_to_dict,
)
from .structure import (
    AutomorphismError,
    asymptotic_parts,
    mu_index,
    mu_index_to_dict,
    peripheral_split,
)
from .weyl import (
    cone_result_to_dict,
    g_mixed_decompose,
    is_weyl_covariant,
    mixed_weyl_decompose,
    weyl_coeffs,
    weyl_coeffs_to_dict,
    weyl_cone_membership,
    weyl_system,
)

__all__ = [
    "main",
    "cmd_analyze",
    "cmd_evolve",
    "cmd_index",
    "cmd_weyl",
    "cmd_decompose_expectation",
]

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ParseError("input document must be a JSON object")
    return data


def _load_channel(path: str) -> Channel:
    return channel_from_dict(_load_json(path))


def _load_generator(path: str) -> Tuple[np.ndarray, Optional[object]]:
    """Load a generator document plus its optional embedded witness."""
    data = _load_json(path)
    lmap = generator_from_dict(data)
    witness = None
    wdoc = data.get("witness")
    if wdoc is not None:
        if not isinstance(wdoc, dict) or wdoc.get("kind") != "transpose":
            raise ParseError('witness documents need {"kind": "transpose", "b": matrix}')
        try:
            b = matrix_from_lists(wdoc["b"])
        except KeyError:
            raise ParseError("transpose witness document is missing 'b'") from None
        try:
            witness = transpose_witness(b, d=b.shape[0])
        except ValueError as exc:
            raise ParseError(f"bad witness matrix: {exc}") from None
    return lmap, witness


def _load_channel_or_generator(path: str):
    data = _load_json(path)
    if "repr" in data:
        return "channel", channel_from_dict(data)
    if "kind" in data:
        return "generator", generator_from_dict(data)
    raise ParseError("document is neither a channel ('repr') nor a generator ('kind')")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _config_echo(cfg: RunConfig) -> dict:
    return {
        "tol": cfg.tol,
        "fw_iters": cfg.fw_iters,
        "starts": cfg.starts,
        "seed": cfg.seed,
        "nmax": cfg.nmax,
    }


def _verified_unital(ch: Channel, tol: float) -> dict:
    rep = verify(ch, tol=tol)
    if not rep.is_unital_channel:
        raise InvalidChannelError(
            "input must be a unital channel: " + json.dumps(rep.to_dict()))
    return rep.to_dict()


def _eigenvalue_pairs(vals: np.ndarray) -> List[List[float]]:
    return [[float(v.real), float(v.imag)] for v in vals]


def cmd_analyze(path: str, cfg: RunConfig) -> dict:
    """Verification flags, peripheral structure, and a mixed-unitary verdict."""
    ch = _load_channel(path)
    flags = _verified_unital(ch, cfg.tol)
    split = peripheral_split(ch)
    report = {
        "command": "analyze",
        "dim": ch.dim,
        "verify": flags,
        "peripheral": {
            "peripheral_dim": split.peripheral_dim,
            "decaying_dim": split.decaying_dim,
            "peripheral_eigenvalues": _eigenvalue_pairs(split.peripheral_eigenvalues),
        },
        "config": _config_echo(cfg),
    }
    dec = fw_decompose(ch, cfg.fw_config())
    if dec.verdict == "MixedUnitary":
        report["verdict"] = "MixedUnitary"
        report["certificate_grade"] = "Constructive"
        report["decomposition"] = decomposition_to_dict(dec)
        return report
    wit = witness_search(ch, cfg.witness_config())
    report["decomposition"] = decomposition_to_dict(dec)
    report["witness"] = witness_to_dict(wit)
    if wit.separating:
        report["verdict"] = f"NotMixedUnitary-{wit.certificate_grade}"
        report["certificate_grade"] = wit.certificate_grade
    else:
        report["verdict"] = "Undetermined"
        report["certificate_grade"] = "Heuristic"
    return report


def cmd_evolve(path: str, grid: np.ndarray, cfg: RunConfig):
    """Scan the semigroup of a generator over a time grid."""
    lmap, witness = _load_generator(path)
    return eventual_mu_scan(lmap, grid, cfg=cfg.fw_config(), witness=witness)


def cmd_index(path: str, cfg: RunConfig) -> dict:
    """Least power after which every sampled power is mixed unitary."""
    ch = _load_channel(path)
    flags = _verified_unital(ch, cfg.tol)
    report = mu_index(ch, n_max=cfg.nmax, cfg=cfg.fw_config())
    return {
        "command": "index",
        "dim": ch.dim,
        "verify": flags,
        "certificate_grade": "Heuristic",
        "index": mu_index_to_dict(report),
        "config": _config_echo(cfg),
    }


def cmd_weyl(path: str, cfg: RunConfig) -> dict:
    """Weyl covariance, Bell coefficients, and exact cone/hull membership."""
    kind, obj = _load_channel_or_generator(path)
    report = {"command": "weyl", "object": kind, "config": _config_echo(cfg),
              "certificate_grade": "Analytic"}
    if kind == "generator":
        rep = validate_generator(obj)
        if not rep.is_valid:
            raise InvalidGeneratorError(
                "input generator is not unital and Hermitian-preserving")
        d = rep.dim
        ws = weyl_system(d)
        covariant = is_weyl_covariant(obj, ws)
        membership = weyl_cone_membership(obj, ws)
        report.update({
            "dim": d,
            "weyl_covariant": covariant,
            "cone_membership": cone_result_to_dict(membership),
            "verdict": membership.verdict,
        })
        if membership.is_member:
            grid = membership.coefficients.reshape(d, d)
            report["coefficients"] = weyl_coeffs_to_dict(grid)
        return report
    ch = obj
    report["dim"] = ch.dim
    report["verify"] = _verified_unital(ch, cfg.tol)
    ws = weyl_system(ch.dim)
    covariant = is_weyl_covariant(ch, ws)
    report["weyl_covariant"] = covariant
    if covariant:
        lam = weyl_coeffs(ch, ws)
        dec = mixed_weyl_decompose(ch, ws)
        report["coefficients"] = weyl_coeffs_to_dict(lam)
        report["verdict"] = dec.verdict
        report["residual"] = dec.residual
    else:
        dec = g_mixed_decompose(ch, ws.flat_table())
        report["verdict"] = dec.verdict
        report["residual"] = dec.residual
    return report


def cmd_decompose_expectation(path: str, cfg: RunConfig) -> dict:
    """Split a channel into its peripheral automorphism and decaying part."""
    ch = _load_channel(path)
    flags = _verified_unital(ch, cfg.tol)
    split = peripheral_split(ch)
    try:
        alpha, beta, u = asymptotic_parts(ch)
    except (AutomorphismError, ValueError) as exc:
        raise InvalidChannelError(str(exc)) from None
    return {
        "command": "decompose-expectation",
        "dim": ch.dim,
        "verify": flags,
        "peripheral_dim": split.peripheral_dim,
        "decaying_dim": split.decaying_dim,
        "peripheral_eigenvalues": _eigenvalue_pairs(split.peripheral_eigenvalues),
        "automorphism_unitary": matrix_to_lists(u),
        "automorphism_part": matrix_to_lists(alpha.superop),
        "decaying_part": matrix_to_lists(beta.superop),
        "config": _config_echo(cfg),
    }


# ---------------------------------------------------------------------------
# Output and argument plumbing
# ---------------------------------------------------------------------------


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        _write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _report_text(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, metavar="PATH",
                        help="input JSON document")
    common.add_argument("--tol", type=float, default=RunConfig.tol,
                        help="verification tolerance")
    common.add_argument("--fw-iters", type=int, default=RunConfig.fw_iters,
                        help="iteration budget for hull projections")
    common.add_argument("--starts", type=int, default=RunConfig.starts,
                        help="multistart count for unitary searches")
    common.add_argument("--seed", type=int, default=RunConfig.seed,
                        help="seed for all randomized searches")
    common.add_argument("--grid", default=None, metavar="SPEC",
                        help="time grid start:end:points[:log]")
    common.add_argument("--nmax", type=int, default=RunConfig.nmax,
                        help="largest power examined by index searches")
    common.add_argument("--out", default=None, metavar="PATH",
                        help="write the report here (atomic) instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (csv applies to scans)")

    parser = argparse.ArgumentParser(
        prog="muchan",
        description="Analyze unital quantum channels and their semigroups.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common],
                   help="verify a channel and decide mixed unitarity")
    sub.add_parser("evolve", parents=[common],
                   help="scan a generator's semigroup over a time grid")
    sub.add_parser("index", parents=[common],
                   help="search for the mixed-unitary index of a channel")
    sub.add_parser("weyl", parents=[common],
                   help="Weyl covariance and exact finite-cone analysis")
    sub.add_parser("decompose-expectation", parents=[common],
                   help="split a channel into automorphism and decaying parts")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(tol=args.tol, fw_iters=args.fw_iters, starts=args.starts,
                     seed=args.seed, grid=args.grid or RunConfig.grid,
                     nmax=args.nmax)


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = _run_config(args)
    try:
        if args.command == "evolve":
            try:
                grid = parse_grid(cfg.grid)
            except ValueError as exc:
                raise ParseError(f"bad grid spec: {exc}") from None
            scan = cmd_evolve(args.input, grid, cfg)
            if (args.format or "csv") == "csv":
                _emit(scan_to_csv(scan), args.out)
            else:
                _emit(_report_text({"command": "evolve",
                                    "config": _config_echo(cfg),
                                    "scan": scan_to_dict(scan)}), args.out)
            return EXIT_OK
        if args.format == "csv":
            raise ParseError(f"{args.command} reports are JSON only")
        if args.command == "analyze":
            report = cmd_analyze(args.input, cfg)
        elif args.command == "index":
            report = cmd_index(args.input, cfg)
        elif args.command == "weyl":
            report = cmd_weyl(args.input, cfg)
        else:
            report = cmd_decompose_expectation(args.input, cfg)
        _emit(_report_text(report), args.out)
        return EXIT_OK
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InvalidChannelError, InvalidGeneratorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
