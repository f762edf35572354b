"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or malformed input,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import itertools
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ADLMap, OreshkovCorrection, adl_generator, calibrate
from .channels import kraus_rank
from .dynamics import (
    NoiseModel,
    codeword,
    correction_generator,
    integrate_master,
    integrate_weights,
    lindblad_generator,
    noise_process,
)
from .errors import CodeDefinitionError, ConvergenceError, DegenerateWeightsError, IntegrationError
from .minimal import (
    build_protocol,
    dump_protocol,
    effective_channel,
    effective_channel_distance,
    target_map,
    verify_dilation,
)
from .stabilizer import BUILTIN_CODES, builtin_code, load_code

SCHEMA = "ctqec/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def _emit(text: str, output: str | None):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="\n") as fh:
            fh.write(text)


def _table_csv(columns: list, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _table_json(columns, rows, meta) -> str:
    doc = {"schema": SCHEMA, "meta": meta, "columns": columns, "rows": [list(r) for r in rows]}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _report(kind, checks: list, meta: dict, fmt_name: str) -> str:
    if fmt_name == "json":
        doc = {"schema": SCHEMA, "kind": kind, "meta": meta, "checks": checks,
               "passed": all(c["passed"] for c in checks)}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    comments = [f"schema={SCHEMA}", f"kind={kind}"] + [f"{k}={fmt(v)}" for k, v in meta.items()]
    rows = [(c["name"], c["value"], c["threshold"], c["passed"]) for c in checks]
    return _table_csv(["check", "value", "threshold", "passed"], rows, comments)


def _threads() -> int | None:
    v = os.environ.get("CTQEC_THREADS")
    if not v:
        return None
    try:
        return max(1, int(v))
    except ValueError:
        raise UsageError(f"CTQEC_THREADS must be an integer, got {v!r}") from None


# -- config files -------------------------------------------------------------

def read_config(path, allowed) -> dict:
    """Flat ``key = value`` lines; ``#`` comments; keys use ``-`` or ``_``."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in allowed:
            raise UsageError(f"{path}: line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


# -- verify -----------------------------------------------------------------------

def _check(name, value, threshold, passed):
    return {"name": name, "value": value, "threshold": threshold, "passed": bool(passed)}


def run_verify(code_spec: str, epsilon: float, seed: int = 0) -> tuple:
    code = load_code(code_spec)
    n, k = code.n, code.k
    r = n - k
    p = build_protocol(n, k, epsilon)
    rep = verify_dilation(p, seed=seed)
    rep_half = verify_dilation(build_protocol(n, k, epsilon / 2), seed=seed)
    dil_ratio = rep.residual / rep_half.residual
    choi_ratio = effective_channel_distance(n, k, epsilon) / effective_channel_distance(n, k, epsilon / 2)
    eff = effective_channel(p)
    hams = [p.measurement_ham] + list(p.correction_hams)
    herm = max(float(np.abs(h - h.conj().T).max()) for h in hams)
    rank = kraus_rank(target_map(n, k, epsilon)) if epsilon > 0 else None
    checks = [
        _check("family_completeness", rep.completeness, 1e-12, rep.completeness <= 1e-12),
        _check("povm_completeness", rep.povm_completeness, 1e-10, rep.povm_completeness <= 1e-10),
        _check("effective_channel_completeness", eff.completeness_residual(), 1e-10,
               eff.completeness_residual() <= 1e-10),
        _check("hamiltonian_hermiticity", herm, 1e-12, herm <= 1e-12),
        _check("order_conditions", max(rep.order_residuals.values()), 1e-10, rep.order_conditions_hold()),
        _check("dilation_residual", rep.residual, None, True),
        _check("dilation_scaling_ratio", dil_ratio, "[6,10]", 6 <= dil_ratio <= 10),
        _check("dilation_order", math.log2(dil_ratio), 3, True),
        _check("choi_scaling_ratio", choi_ratio, ">=6", choi_ratio >= 6),
        _check("choi_order", math.log2(choi_ratio), ">=3", True),
        _check("kraus_rank", rank, 2**r + 1, rank == 2**r + 1 if rank is not None else True),
        _check("ancilla_qubits", p.ancilla_qubits, r + 1, p.ancilla_qubits == r + 1),
    ]
    meta = {"code": code.name, "n": n, "k": k, "epsilon": epsilon, "seed": seed}
    return checks, meta


def cmd_verify(args) -> int:
    checks, meta = run_verify(args.code, args.epsilon, args.seed)
    _emit(_report("verify", checks, meta, args.format), args.output)
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_FAIL


# -- simulate -----------------------------------------------------------------------

def resolve_kappa(value: str, lam: float) -> tuple:
    """``"100"`` (in units of lambda) or ``"calibrated:64"`` (ADL kappa2 = 64 lambda, gamma2 = 2 kappa2)."""
    value = str(value).strip()
    if value.startswith("calibrated:"):
        k2 = float(value.split(":", 1)[1])
        cal = calibrate(k2, 2 * k2, workers=_threads())
        return cal.kappa * lam, {"kappa2": k2 * lam, "gamma2": 2 * k2 * lam, "calibration_ratio": cal.ratio}
    try:
        return float(value) * lam, {}
    except ValueError:
        raise UsageError(f"kappa must be a number or calibrated:<kappa2>, got {value!r}") from None


def _initial(code):
    psi = codeword(code)
    return psi, np.outer(psi, psi.conj())


def simulate_policy(code, noise: NoiseModel, kappa: float, policy: str, t_end: float, dt: float, method: str,
                    samples_per_unit: int):
    """One trajectory; returns a SimulationTrace."""
    if method == "weights":
        if code.name != "three_qubit_bit_flip" or noise.kind != "bit_flip":
            raise UsageError("method=weights needs the three_qubit_bit_flip code with bit_flip noise")
        stride = max(1, int(round(1.0 / (samples_per_unit * dt * (noise.rate or 1.0)))))
        return integrate_weights(noise.rate, kappa, policy, t_end, dt, stride=stride)
    psi, rho0 = _initial(code)
    if policy == "constant":
        corr = correction_generator(code.n, code.k, kappa)
    else:
        corr = OreshkovCorrection(code.n, code.k, kappa, "optimal")
    gen = lindblad_generator(noise, code) if code.n <= 3 else noise_process(noise, code)
    stride = max(1, int(round(1.0 / (samples_per_unit * dt * (noise.rate or 1.0)))))
    return integrate_master(gen, corr, rho0, t_end, dt, code=code, psi0=psi, stride=stride)


def _sim_columns(tr, suffix=""):
    cols = {f"codeword_fidelity{suffix}": tr.codeword_fidelity, f"correctable_overlap{suffix}": tr.correctable_overlap}
    if tr.weights is not None:
        for i in range(4):
            cols[f"w{i}{suffix}"] = tr.weights[:, i]
    return cols


def cmd_simulate(args) -> int:
    if args.lam < 0 or args.t_end <= 0 or args.dt <= 0:
        raise UsageError("need lambda >= 0, t_end > 0, dt > 0")
    code = load_code(args.code)
    noise = NoiseModel(args.noise, args.lam, code.n, args.depolarizing_scale)
    kappa, extra = resolve_kappa(args.kappa, args.lam if args.lam > 0 else 1.0)
    method = args.method
    if method == "auto":
        method = "weights" if code.name == "three_qubit_bit_flip" and args.noise == "bit_flip" else "master"
    policies = [args.policy] + ([args.compare] if args.compare else [])
    meta = {"schema": SCHEMA, "code": code.name, "noise": args.noise, "lambda": args.lam, "kappa": kappa,
            "policy": args.policy, "compare": args.compare or "",
            "t_end": args.t_end, "dt": args.dt, "method": method, "seed": args.seed, **extra}
    traces, failure = [], None
    for pol in policies:
        try:
            traces.append(simulate_policy(code, noise, kappa, pol, args.t_end, args.dt, method,
                                          args.samples_per_unit))
        except IntegrationError as exc:
            traces.append(exc.trace)
            failure = str(exc)
            break
    n_rows = min(len(t) for t in traces)
    columns = {"t": traces[0].times[:n_rows]}
    for pol, tr in zip(policies, traces):
        suffix = f"_{pol}" if len(policies) > 1 else ""
        columns.update({k: v[:n_rows] for k, v in _sim_columns(tr, suffix).items()})
    meta["completed"] = failure is None
    if failure:
        meta["error"] = failure
    names = list(columns)
    rows = zip(*(columns[c] for c in names))
    if args.format == "json":
        text = _table_json(names, rows, meta)
    else:
        text = _table_csv(names, rows, [f"{k}={fmt(v)}" for k, v in meta.items()])
    _emit(text, args.output)
    if failure:
        print(f"error: {failure}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# -- calibrate ---------------------------------------------------------------------

def _sign_text(signs) -> str:
    return "".join("+" if s > 0 else "-" for s in signs)


def parse_signs(text: str) -> tuple:
    """``"+,-,+"`` or ``"+-+"``."""
    text = str(text).strip()
    parts = [s.strip() for s in text.split(",")] if "," in text else list(text)
    if len(parts) != 3 or any(s not in ("+", "-", "+1", "-1", "1") for s in parts):
        raise UsageError(f"signs must be three comma-separated +/- values, got {text!r}")
    return tuple(-1 if s.startswith("-") else 1 for s in parts)


def cmd_calibrate(args) -> int:
    if args.kappa2 <= 0 or args.gamma2 <= 0:
        raise UsageError("kappa2 and gamma2 must be positive")
    sign_sets = list(itertools.product((1, -1), repeat=3)) if args.all_signs else [parse_signs(args.signs)]
    rows = []
    for signs in sign_sets:
        cal = calibrate(args.kappa2, args.gamma2, signs, restarts=args.restarts, seed=args.seed,
                        workers=_threads())
        rows.append((_sign_text(signs), cal.kappa, cal.ratio, cal.adl_norm))
    meta = {"kappa2": args.kappa2, "gamma2": args.gamma2, "restarts": args.restarts, "seed": args.seed}
    cols = ["signs", "kappa", "kappa_over_kappa2", "adl_diamond_norm"]
    if args.format == "json":
        text = _table_json(cols, rows, meta)
    else:
        text = _table_csv(cols, rows, [f"schema={SCHEMA}"] + [f"{k}={fmt(v)}" for k, v in meta.items()])
    _emit(text, args.output)
    return EXIT_OK


# -- compare ------------------------------------------------------------------------

def cmd_compare(args) -> int:
    lam = args.lam
    if lam <= 0 or args.t_end <= 0 or args.dt <= 0:
        raise UsageError("need lambda > 0, t_end > 0, dt > 0")
    signs = parse_signs(args.signs)
    k2, g2 = args.kappa2 * lam, args.gamma2 * lam
    cal = calibrate(k2, g2, signs, workers=_threads())
    code = builtin_code("three_qubit_bit_flip")
    noise = lindblad_generator(NoiseModel("bit_flip", lam, 3), code)
    psi, rho0 = _initial(code)
    stride = max(1, int(round(1.0 / (args.samples_per_unit * lam * args.dt))))
    meta = {"schema": SCHEMA, "lambda": lam, "kappa": cal.kappa, "kappa2": k2, "gamma2": g2,
            "signs": _sign_text(signs), "calibration_ratio": cal.ratio,
            "adl_note": "ADL curve is an averaged-map reconstruction and depends on the sign choice"}
    traces, failure = [], None
    for corr in (correction_generator(3, 1, cal.kappa), adl_generator(ADLMap(k2, g2, signs), "corrected")):
        try:
            traces.append(integrate_master(noise, corr, rho0, args.t_end, args.dt, code=code, psi0=psi,
                                           stride=stride))
        except IntegrationError as exc:
            traces.append(exc.trace)
            failure = str(exc)
            break
    n_rows = min(len(t) for t in traces)
    columns = {"t": traces[0].times[:n_rows]}
    for label, tr in zip(("minimal", "adl"), traces):
        columns[f"codeword_fidelity_{label}"] = tr.codeword_fidelity[:n_rows]
        columns[f"correctable_overlap_{label}"] = tr.correctable_overlap[:n_rows]
    meta["completed"] = failure is None
    names = list(columns)
    rows = zip(*(columns[c] for c in names))
    if args.format == "json":
        text = _table_json(names, rows, meta)
    else:
        text = _table_csv(names, rows, [f"{k}={fmt(v)}" for k, v in meta.items()])
    _emit(text, args.output)
    if failure:
        print(f"error: {failure}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# -- dump / codes ------------------------------------------------------------------

def cmd_dump(args) -> int:
    code = load_code(args.code)
    p = build_protocol(code.n, code.k, args.epsilon)
    text = dump_protocol(p)
    if args.format == "json":
        doc = {"schema": SCHEMA, "n": p.n, "k": p.k, "epsilon": p.epsilon, "ancilla_qubits": p.ancilla_qubits,
               "matrices": {}}
        from .minimal import load_dump
        for name, m in load_dump(io.StringIO(text))["matrices"].items():
            doc["matrices"][name] = {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}
        text = json.dumps(doc, sort_keys=True) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def cmd_codes(args) -> int:
    rows = []
    for name in BUILTIN_CODES:
        c = builtin_code(name)
        rows.append((name, c.n, c.k, c.distance, " ".join(str(g) for g in c.generators)))
    cols = ["name", "n", "k", "distance", "generators"]
    text = _table_json(cols, rows, {}) if args.format == "json" else _table_csv(cols, rows)
    _emit(text, args.output)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def _common(p, config=True):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    if config:
        p.add_argument("--config", default=None, help="key=value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ctqec", description="Quantum-jump continuous-time error correction tools")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="build the minimal protocol and check its invariants")
    v.add_argument("--code", required=True)
    v.add_argument("--epsilon", type=float, default=0.05)
    v.add_argument("--seed", type=int, default=0)
    _common(v, config=False)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="integrate noise plus correction dynamics")
    s.add_argument("--code", default="three_qubit_bit_flip")
    s.add_argument("--noise", choices=("bit_flip", "depolarizing"), default="bit_flip")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--kappa", default="100", help="rate in units of lambda, or calibrated:<kappa2>")
    s.add_argument("--policy", choices=("constant", "optimal"), default="constant")
    s.add_argument("--compare", choices=("constant", "optimal"), default=None)
    s.add_argument("--t-end", type=float, default=5.0)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--method", choices=("auto", "weights", "master"), default="auto")
    s.add_argument("--depolarizing-scale", type=float, default=1.0)
    s.add_argument("--samples-per-unit", type=int, default=100)
    _common(s)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="strength-match kappa to the ADL map")
    c.add_argument("--kappa2", type=float, default=64.0)
    c.add_argument("--gamma2", type=float, default=128.0)
    c.add_argument("--signs", default="+++")
    c.add_argument("--all-signs", action="store_true")
    c.add_argument("--restarts", type=int, default=32)
    c.add_argument("--seed", type=int, default=0)
    _common(c, config=False)
    c.set_defaults(func=cmd_calibrate)

    m = sub.add_parser("compare", help="minimal protocol at calibrated kappa vs the ADL averaged map")
    m.add_argument("--lambda", dest="lam", type=float, default=1.0)
    m.add_argument("--kappa2", type=float, default=64.0, help="in units of lambda")
    m.add_argument("--gamma2", type=float, default=128.0, help="in units of lambda")
    m.add_argument("--signs", default="+++")
    m.add_argument("--t-end", type=float, default=1.0)
    m.add_argument("--dt", type=float, default=1e-4)
    m.add_argument("--samples-per-unit", type=int, default=100)
    _common(m)
    m.set_defaults(func=cmd_compare)

    d = sub.add_parser("dump", help="write protocol matrices")
    d.add_argument("--code", required=True)
    d.add_argument("--epsilon", type=float, default=0.05)
    _common(d, config=False)
    d.set_defaults(func=cmd_dump)

    cl = sub.add_parser("codes", help="code catalogue")
    cl.add_argument("action", choices=("list",))
    _common(cl, config=False)
    cl.set_defaults(func=cmd_codes)
    return ap


def _apply_config(parser, argv):
    """Re-parse with config-file values as defaults so explicit flags win."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        allowed = {a.dest for a in sub._actions} - {"help", "config"}
        cfg = read_config(args.config, allowed)
        typed = {}
        for key, raw in cfg.items():
            action = next(a for a in sub._actions if a.dest == key)
            try:
                typed[key] = action.type(raw) if action.type else raw
            except ValueError:
                raise UsageError(f"{args.config}: bad value for {key}: {raw!r}") from None
            if action.choices and typed[key] not in action.choices:
                raise UsageError(f"{args.config}: {key} must be one of {sorted(action.choices)}")
        sub.set_defaults(**typed)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if getattr(args, "dt", "unset") is None:
            args.dt = 1e-4 if args.command == "simulate" and args.method != "master" else 1e-3
            if args.command == "simulate" and args.method == "auto":
                code_is_weights = args.code == "three_qubit_bit_flip" and args.noise == "bit_flip"
                args.dt = 1e-4 if code_is_weights else 1e-3
            args.dt /= args.lam if getattr(args, "lam", 0) > 0 else 1.0
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, CodeDefinitionError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, IntegrationError, DegenerateWeightsError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
