"""Command-line driver: ``oaqec validate | analyze | fixture | dilate``.

Exit codes: 0 pass, 1 analysis-level failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import DegeneracyError, center, is_factor, structure
from .channel import (
    DilationModel,
    choi,
    dilate_to_kraus,
    error_span_levels,
    identity_channel,
    interaction_operators,
    validate,
)
from .constructions import FIXTURES, make_fixture
from .documents import (
    DocumentError,
    channel_from_doc,
    channel_to_doc,
    digest_array,
    digest_bytes,
    dumps,
    loads_json,
    matrix_from_doc,
    matrix_to_doc,
    matrix_to_pairs,
)
from .matcore import DEFAULT_TOL, DimensionError, DomainError, NumericalInstabilityError, is_hermitian, is_isometry
from .qec import (
    build_package,
    check_kl,
    check_restricted_noiseless,
    check_subsystem,
    correction_tp_residual,
    homomorphism_residual,
    noiseless_algebra,
    restricted_code,
    verify_correction,
    verify_fixed,
)


EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# projector digests are basis independent but cost d^4 memory
_PROJECTOR_DIGEST_MAX_DIM = 16


class UsageError(Exception):
    pass


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_channel(path: str):
    raw = _read(path)
    try:
        return raw, channel_from_doc(loads_json(raw.decode("utf-8")))
    except (DocumentError, DimensionError, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _load_matrix(path: str):
    try:
        return matrix_from_doc(loads_json(_read(path).decode("utf-8")))
    except (DocumentError, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _emit(text: str, out: str | None = None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _basis_digest(alg) -> str:
    if alg.dim_h <= _PROJECTOR_DIGEST_MAX_DIM:
        cols = alg.basis.columns()
        return digest_array(cols @ cols.conj().T)
    return digest_array(alg.basis.mats)


def _structure_section(alg, tol: float, seed: int) -> dict:
    try:
        st = structure(alg, tol, seed=seed)
        blocks = [[b.n, b.m] for b in st.blocks]
    except DegeneracyError:
        blocks = None
    return {
        "dim": alg.dim,
        "structure": blocks,
        "is_factor": bool(is_factor(alg, tol)),
        "center_dim": center(alg, tol).dim,
        "basis_digest": _basis_digest(alg),
    }


def _validation_section(ch, tol: float) -> dict:
    rep = validate(ch, tol)
    return {
        "tp_residual": rep.tp_residual,
        "choi_min_eigenvalue": rep.choi_min_eigenvalue,
        "pass": bool(rep.passed),
    }


def cmd_validate(args) -> int:
    _, ch = _load_channel(args.path)
    tol = args.tolerance
    sec = {"d_in": ch.d_in, "d_out": ch.d_out, "kraus_count": len(ch), "tolerance": tol}
    sec.update(_validation_section(ch, tol))
    sys.stdout.write(dumps(sec))
    return EXIT_OK if sec["pass"] else EXIT_FAIL


def _restricted_section(ch, path: str, subsystem, tol: float, seed: int) -> dict:
    v, _ = _load_matrix(path)
    if v.shape[0] != ch.d_in:
        raise UsageError(f"{path}: isometry maps into C^{v.shape[0]}, channel input is C^{ch.d_in}")
    if not is_isometry(v, tol):
        raise UsageError(f"{path}: not an isometry within tolerance {tol:g}")
    code = restricted_code(ch, v, tol)
    kl = check_kl(v, ch, tol)
    sec = {
        "isometry": path,
        "code_dim": v.shape[1],
        "kl_residual": kl.residual,
        "kl_pass": bool(kl.passed),
    }
    if subsystem is not None:
        d_a, d_b = subsystem
        if d_a * d_b != v.shape[1]:
            raise UsageError(f"--subsystem {d_a} {d_b} does not factor the {v.shape[1]}-dimensional code")
        sub = check_subsystem(v, d_a, d_b, ch, tol)
        sec["subsystem_residual"] = sub.residual
        sec["subsystem_pass"] = bool(sub.passed)
    sec["algebra"] = _structure_section(code.a0, tol, seed)
    sec["a0_residual"] = code.a0_residual
    sec["simultaneous_residual"] = code.simultaneous_residual
    sec["s0_dim"] = len(code.s0)
    sec["s0_product_residual"] = code.s0_product_residual
    sec["s0_is_algebra"] = bool(code.s0_is_algebra(tol))
    if ch.d_in == ch.d_out:
        sec["restricted_noiseless_dim"] = check_restricted_noiseless(v, ch, tol).algebra.dim
    else:
        sec["restricted_noiseless_dim"] = None
    sec["pass"] = code.a0_residual <= tol and code.simultaneous_residual <= tol
    return sec


def analyze_report(raw: bytes, ch, tol: float, seed: int, isometries=(), subsystem=None) -> tuple[dict, int]:
    """Build the analysis report for a parsed channel; returns ``(report, exit code)``."""
    report = {
        "version": "oaqec/1",
        "kind": "analysis",
        "tool_version": __version__,
        "input_digest": digest_bytes(raw),
        "tolerance": tol,
        "seed": seed,
        "d_in": ch.d_in,
        "d_out": ch.d_out,
        "kraus_count": len(ch),
    }
    val = _validation_section(ch, tol)
    report["validation"] = val
    if not val["pass"]:
        report["pass"] = False
        return report, EXIT_FAIL

    pkg = build_package(ch, None, tol)
    report["correctable"] = _structure_section(pkg.correctable, tol, seed)

    if ch.d_in == ch.d_out:
        nl = noiseless_algebra(ch, tol)
        sec = _structure_section(nl, tol, seed)
        fixed = verify_fixed(ch, nl, tol)
        sec["fixed_residual"] = fixed
        sec["identity_correction_residual"] = verify_correction(ch, identity_channel(ch.d_in), nl, tol)
        sec["pass"] = fixed <= tol
        report["noiseless"] = sec
    else:
        report["noiseless"] = None

    tp_supp = correction_tp_residual(pkg, tol)
    report["correction"] = {
        "d_in": pkg.correction.d_in,
        "d_out": pkg.correction.d_out,
        "support_rank": pkg.support_rank,
        "tp_on_support_residual": tp_supp,
        "choi_digest": digest_array(choi(pkg.correction)),
        "kraus": [matrix_to_pairs(k) for k in pkg.correction.kraus],
    }

    hom = homomorphism_residual(pkg, tol)
    corr_res = verify_correction(ch, pkg.correction, pkg.correctable, tol)
    ver = {
        "correction_residual": corr_res,
        "homomorphism_residual": hom.homomorphism,
        "faithful_residual": hom.faithful,
        "tp_on_support_residual": tp_supp,
    }
    ver["pass"] = max(corr_res, hom.homomorphism, hom.faithful, tp_supp) <= tol
    report["verification"] = ver

    restricted = [_restricted_section(ch, p, subsystem, tol, seed) for p in isometries]
    report["restricted"] = restricted

    ok = ver["pass"] and (report["noiseless"] is None or report["noiseless"]["pass"])
    ok = ok and all(r["pass"] for r in restricted)
    report["pass"] = bool(ok)
    return report, EXIT_OK if ok else EXIT_FAIL


def cmd_analyze(args) -> int:
    raw, ch = _load_channel(args.path)
    if args.subsystem is not None and not args.isometry:
        raise UsageError("--subsystem needs at least one --isometry")
    report, code = analyze_report(raw, ch, args.tolerance, args.seed, args.isometry or (), args.subsystem)
    sys.stdout.write(dumps(report))
    return code


def _parse_probs(text: str | None):
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--probs: {exc}") from exc


def cmd_fixture(args) -> int:
    if args.name not in FIXTURES:
        raise UsageError(f"unknown fixture {args.name!r}; available: {', '.join(FIXTURES)}")
    params = {"seed": args.seed}
    if args.name == "type1":
        params.update(d0=args.d0, m=args.m, probs=_parse_probs(args.probs), d_total=args.d_total)
    elif args.name == "rotation-analog":
        params.update(q=args.q, include_identity=not args.no_identity)
    try:
        fx = make_fixture(args.name, **params)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    expected = {
        "correctable_dim": fx.expected_correctable_dim,
        "correctable_structure": [list(b) for b in fx.expected_structure],
        "noiseless_dim": fx.expected_noiseless_dim,
        "noiseless_structure": None if fx.expected_noiseless_structure is None
        else [list(b) for b in fx.expected_noiseless_structure],
        "code_dim": fx.expected_code_dim,
    }
    meta = {
        "name": fx.name,
        "seed": args.seed,
        "provenance": "oaqec fixture",
        "params": fx.params,
        "expected": expected,
        "notes": fx.notes,
    }
    _emit(dumps(channel_to_doc(fx.channel, meta)), args.out)
    if args.isometry_out:
        if fx.isometry is None:
            raise UsageError(f"fixture {args.name!r} has no code isometry")
        _emit(dumps(matrix_to_doc(fx.isometry, metadata={"name": f"{fx.name}-code"})), args.isometry_out)
    return EXIT_OK


def _env_state(value: str, d_env: int) -> np.ndarray:
    if value.lstrip("-").isdigit():
        k = int(value)
        if not 0 <= k < d_env:
            raise UsageError(f"--env-state {k} out of range for a {d_env}-dimensional environment")
        psi = np.zeros(d_env, dtype=complex)
        psi[k] = 1.0
        return psi
    m, _ = _load_matrix(value)
    psi = m.reshape(-1)
    if psi.size != d_env:
        raise UsageError(f"--env-state has {psi.size} entries, environment dimension is {d_env}")
    return psi


def cmd_dilate(args) -> int:
    h, dims = _load_matrix(args.hamiltonian)
    if dims is None:
        raise UsageError(f"{args.hamiltonian}: Hamiltonian document must declare dims [d_sys, d_env]")
    if h.shape[0] != h.shape[1] or not is_hermitian(h, args.tolerance):
        raise UsageError(f"{args.hamiltonian}: Hamiltonian is not Hermitian")
    d_sys, d_env = dims
    if args.order_span is not None:
        if args.order_span < 0:
            raise UsageError("--order-span must be non-negative")
        ops = interaction_operators(h, d_sys, d_env, args.tolerance)
        levels = error_span_levels(ops, args.order_span, args.tolerance)
        table = {
            "version": "oaqec/1",
            "kind": "span-table",
            "d_sys": d_sys,
            "interaction_count": len(ops),
            "orders": list(range(args.order_span + 1)),
            "dims": [len(b) for b in levels],
        }
        _emit(dumps(table), args.out)
        return EXIT_OK
    psi = _env_state(args.env_state, d_env)
    try:
        ch = dilate_to_kraus(DilationModel(h, psi, args.t), tol=args.tolerance)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    meta = {"name": "dilation", "provenance": "oaqec dilate", "params": {"t": args.t, "env_state": args.env_state}}
    _emit(dumps(channel_to_doc(ch, meta)), args.out)
    return EXIT_OK


def _tolerance(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not np.isfinite(val) or val <= 0:
        raise argparse.ArgumentTypeError("tolerance must be positive and finite")
    return val


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oaqec", description="Operator-algebra error correction toolkit.")
    p.add_argument("--version", action="version", version=f"oaqec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_tol(sp):
        sp.add_argument("--tolerance", type=_tolerance, default=DEFAULT_TOL, help="numerical tolerance (default 1e-9)")

    sp = sub.add_parser("validate", help="check that a channel document is CPTP")
    sp.add_argument("path")
    with_tol(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("analyze", help="full correctable/noiseless analysis as JSON")
    sp.add_argument("path")
    with_tol(sp)
    sp.add_argument("--isometry", action="append", metavar="PATH", help="code isometry document (repeatable)")
    sp.add_argument("--subsystem", nargs=2, type=int, metavar=("DA", "DB"), help="check a subsystem code C^DA (x) C^DB")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("fixture", help="write a labelled fixture channel document")
    sp.add_argument("name", help=f"one of: {', '.join(FIXTURES)}")
    sp.add_argument("--d0", type=int, default=2)
    sp.add_argument("--m", type=int, default=3)
    sp.add_argument("--probs", help="comma-separated probabilities")
    sp.add_argument("--d-total", type=int, dest="d_total")
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--no-identity", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--isometry-out", dest="isometry_out")
    sp.set_defaults(func=cmd_fixture)

    sp = sub.add_parser("dilate", help="Kraus operators from a system-environment Hamiltonian")
    sp.add_argument("hamiltonian")
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--env-state", default="0", help="basis index or state document (default 0)")
    sp.add_argument("--order-span", type=int, dest="order_span", metavar="N")
    sp.add_argument("--out")
    with_tol(sp)
    sp.set_defaults(func=cmd_dilate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"oaqec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegeneracyError, NumericalInstabilityError) as exc:
        print(f"oaqec: analysis failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
