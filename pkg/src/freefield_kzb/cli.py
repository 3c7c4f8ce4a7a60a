"""Command line front-end: ``freefield-kzb <subcommand> [options]``.

Subcommands: theta, realize, verify, correlator, kzb-residual.  Inputs come
from a YAML config (``--config``), from flags, and from environment
variables ``FREEFIELD_KZB_<FLAG>``; flags win over the environment, which
wins over the config file.  Output is JSON with sorted keys (or CSV).

Exit codes: 0 success, 1 a verification check failed, 2 the config could not
be parsed, 3 inputs violate a precondition, 4 a numerical budget was missed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
import time
from fractions import Fraction
import yaml

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_BUDGET = 4

ENV_PREFIX = "FREEFIELD_KZB_"
SUBCOMMANDS = ("theta", "realize", "verify", "correlator", "kzb-residual")


class ConfigError(ValueError):
    pass


class BudgetError(RuntimeError):
    pass


class CheckFailed(RuntimeError):
    def __init__(self, report):
        super().__init__("verification failed")
        self.report = report


# parsing helpers ---------------------------------------------------------------

def parse_number(x, exact: bool = False):
    """Decimal strings become Fractions when ``exact``; complex strings like '0.3+0.1j' are accepted."""
    if isinstance(x, bool):
        raise ConfigError(f"expected a number, got {x!r}")
    if isinstance(x, Fraction):
        return x if exact else float(x)
    if isinstance(x, (int, float)):
        return Fraction(str(x)) if exact else x
    if isinstance(x, str):
        s = x.strip().replace(" ", "")
        try:
            if exact:
                return Fraction(s)
            if "j" in s:
                return complex(s)
            return float(s)
        except ValueError as exc:
            raise ConfigError(f"cannot parse number {x!r}") from exc
    raise ConfigError(f"expected a number, got {x!r}")


def _to_real_or_complex(v):
    return parse_number(v)


def _weight(x, rank: int) -> tuple:
    if not isinstance(x, (list, tuple)) or len(x) != rank:
        raise ConfigError(f"weights need {rank} simple-root coordinates, got {x!r}")
    return tuple(parse_number(c, exact=True) for c in x)


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return data


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return jsonable(x.item())
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    return str(x)


def dump_json(payload: dict) -> str:
    return json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _flatten(prefix: str, x, out: list):
    if isinstance(x, dict):
        for k in sorted(x, key=str):
            _flatten(f"{prefix}.{k}" if prefix else str(k), x[k], out)
    elif isinstance(x, (list, tuple)) and any(isinstance(v, (dict, list, tuple)) for v in x):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, json.dumps(jsonable(x), sort_keys=True)))


def dump_csv(payload: dict) -> str:
    """Two-column key,value rows; the plotting hand-off."""
    rows: list = []
    _flatten("", jsonable(payload), rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


# settings -----------------------------------------------------------------------------

def resolve_settings(args, cfg: dict) -> dict:
    """Flag > environment > config > default for the shared options."""
    defaults = {"tol": None, "cutoff": None, "threads": 1, "output": "json", "seed": 0}
    casts = {"tol": float, "cutoff": int, "threads": int, "output": str, "seed": int}
    out = {}
    for key, default in defaults.items():
        val = getattr(args, key, None)
        if val is None:
            env = os.environ.get(ENV_PREFIX + key.upper())
            val = env if env not in (None, "") else cfg.get(key, default)
        try:
            out[key] = casts[key](val) if val is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    if out["output"] not in ("json", "csv"):
        raise ConfigError(f"output must be json or csv, got {out['output']!r}")
    if out["threads"] is not None and out["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    return out


# subcommands -------------------------------------------------------------------------------

THETA_FUNCTIONS = ("theta11", "theta11_deriv", "vartheta", "sigma", "w", "zeta", "zeta_log_deriv", "eta", "qpoch")


def cmd_theta(cfg: dict, settings: dict) -> dict:
    from . import special

    fn = cfg.get("function", "theta11")
    if fn not in THETA_FUNCTIONS:
        raise ConfigError(f"function must be one of {THETA_FUNCTIONS}")
    if "q" not in cfg:
        raise ConfigError("theta needs q")
    q = _to_real_or_complex(cfg["q"])
    method = cfg.get("method", "sum")
    zs = cfg.get("z", 1.0)
    zs = zs if isinstance(zs, list) else [zs]
    c = _to_real_or_complex(cfg.get("c", 0.0))
    w = _to_real_or_complex(cfg.get("w", 1.0))
    rows = []
    for z in zs:
        z = _to_real_or_complex(z)
        if fn == "theta11":
            v = special.theta11(z, q, method=method)
        elif fn == "theta11_deriv":
            v = special.theta11_deriv(z, q, method=method)
        elif fn == "vartheta":
            v = special.vartheta(z, q)
        elif fn == "sigma":
            v = special.sigma_fn(c, z, q)
        elif fn == "w":
            v = special.w_fn(c, w, z, q)
        elif fn == "zeta":
            v = special.zeta_fn(z, q)
        elif fn == "zeta_log_deriv":
            v = special.zeta_log_deriv(z, q)
        elif fn == "eta":
            v = special.eta(q)
        else:
            v = special.qpoch(z, q)
        v = complex(v)
        rows.append({"z": complex(z), "value_re": v.real, "value_im": v.imag})
    return {"function": fn, "q": complex(q), "c": complex(c), "w": complex(w), "method": method,
            "branch_policy": special.BRANCH_POLICY, "values": rows}


def _algebra(cfg):
    from .lie import build_algebra

    return build_algebra(str(cfg.get("algebra", "A1")))


def cmd_realize(cfg: dict, settings: dict) -> dict:
    from .flagdiff import realize, screen_left

    alg = _algebra(cfg)
    lam = cfg.get("lambda")
    lam = None if lam is None else [parse_number(x, exact=True) for x in lam]
    ops = {tag: str(realize(alg, tag, lam)) for tag in alg.generator_tags()}
    scr = {str(list(r)): str(screen_left(alg, r)) for r in alg.positive_roots}
    return {"algebra": alg.describe(), "lambda": "symbolic" if lam is None else lam,
            "operators": ops, "screenings": scr}


def _check_report(name, ok, **details):
    return {"name": name, "ok": bool(ok), **details}


def cmd_verify(cfg: dict, settings: dict) -> dict:
    from .fock import TruncatedFockSpace
    from .flagdiff import verify_realization
    from .wakimoto import (WakimotoModule, casimir_check, constants_as_lpoly, solve_constants,
                           verify_affine, verify_virasoro_and_sugawara, verify_w0)

    alg = _algebra(cfg)
    cutoff = settings["cutoff"] if settings["cutoff"] is not None else int(cfg.get("cutoff", 4))
    tol = settings["tol"] if settings["tol"] is not None else 1e-9
    max_mode = int(cfg.get("max_mode", 2 if alg.rank == 1 else 1))
    max_energy = cfg.get("max_energy", None if alg.rank == 1 else 1)
    default_mom = [Fraction(1, 2)] if alg.rank == 1 else [Fraction(1)] + [Fraction(1, 2)] * (alg.rank - 1)
    momentum = tuple(parse_number(x, exact=True) for x in cfg.get("momentum", default_mom))
    if len(momentum) != alg.rank:
        raise ConfigError("momentum needs one coordinate per simple root")
    checks = []
    t0 = time.perf_counter()

    rep = verify_realization(alg)
    checks.append(_check_report("realization", rep.ok, checked=len(rep.checked), failures=rep.failures))

    const_cutoffs = (2, 3) if alg.rank == 1 else (1, 2)
    sols = [solve_constants(alg, cutoff=L) for L in const_cutoffs]
    same = [str(a) for a in sols[0]] == [str(b) for b in sols[1]]
    checks.append(_check_report("constants", same, cutoffs=list(const_cutoffs),
                                values=[str(v) for v in sols[0]]))

    module = WakimotoModule(alg, constants=constants_as_lpoly(sols[0]))
    space = TruncatedFockSpace(alg, momentum, cutoff)
    for r in (verify_affine(module, space, max_mode, max_energy=max_energy),
              verify_virasoro_and_sugawara(module, space, max_mode, max_energy=max_energy),
              verify_w0(module, space)):
        checks.append(_check_report(r.name, r.ok, checked=r.checked, failures=[str(f) for f in r.failures[:20]],
                                    **{k: v for k, v in r.details.items()}))
    try:
        cas = casimir_check(module, space)
        expected = alg.inner(momentum, tuple(m + 2 * p for m, p in zip(momentum, alg.weyl_vector)))
        checks.append(_check_report("casimir", cas == expected, value=cas, expected=expected))
    except Exception as exc:  # non-scalar action is a failed check, not a crash
        checks.append(_check_report("casimir", False, error=str(exc)))

    checks.append(_special_checks(tol))
    checks.append(_ward_checks(alg, settings["seed"], tol))
    ok = all(c["ok"] for c in checks)
    report = {"algebra": alg.label, "cutoff": cutoff, "momentum": momentum, "max_mode": max_mode,
              "max_energy": max_energy, "seed": settings["seed"], "ok": ok, "checks": checks,
              "states": len(space.basis)}
    if cfg.get("timing"):
        report["seconds"] = round(time.perf_counter() - t0, 1)
    if not ok:
        raise CheckFailed(report)
    return report


def _special_checks(tol: float) -> dict:
    import cmath

    from .special import residue_at_pole, theta11, w_fn

    worst_theta = worst_period = 0.0
    for aq in (0.1, 0.3, 0.5):
        q = aq * cmath.exp(0.4j)
        for r in (aq ** 0.5, 1.0, aq ** -0.5):
            z = r * cmath.exp(1.1j)
            a, b = theta11(z, q), theta11(z, q, method="product")
            worst_theta = max(worst_theta, abs(a - b) / max(abs(a), 1e-300))
    q, c, w, z = 0.3, 0.7, 0.8 + 0.1j, 0.45 - 0.2j
    base = w_fn(c, w, z, q)
    worst_period = max(abs(w_fn(c, w, z * q, q) - cmath.exp(c) * base) / abs(base),
                       abs(w_fn(c, w * q, z, q) - cmath.exp(-c) / q * base) / abs(base))
    res = residue_at_pole(lambda x: w_fn(c, w, x, q), w)
    ok = worst_theta < 1e-12 and worst_period < 1e-10 and abs(res - 1) < 1e-8
    return _check_report("special_functions", ok, theta_sum_vs_product=worst_theta,
                         w_period=worst_period, residue_error=abs(res - 1))


def _ward_checks(alg, seed: int, tol: float) -> dict:
    import cmath

    from .corr import factorized_ghost, recursive_ghost, ward_residual
    from .flagdiff import coordinates

    rng = random.Random(seed)
    x = coordinates(alg)
    worst_ward = worst_fact = 0.0
    for _ in range(10):
        q = rng.uniform(0.1, 0.4)
        h = tuple(rng.uniform(0.1, 0.4) for _ in range(alg.rank))
        zs = [cmath.rect(rng.uniform(0.6, 1.0), rng.uniform(0, 6.28)) for _ in range(2)]
        m = rng.randint(1, 2)
        roots = [alg.simple_root(rng.randrange(alg.rank)) for _ in range(m)]
        ts = [cmath.rect(rng.uniform(0.6, 1.0), rng.uniform(0, 6.28)) for _ in range(m)]
        Ps = [x[0] ** 2 + 1, x[-1] + 2]
        root = alg.simple_root(rng.randrange(alg.rank))
        t = cmath.rect(rng.uniform(0.6, 1.0), rng.uniform(0, 6.28))
        worst_ward = max(worst_ward, abs(ward_residual(alg, Ps, zs, root, t, roots, ts, q, h)))
        a = factorized_ghost(alg, Ps, zs, roots, ts, q, h)
        b = recursive_ghost(alg, Ps, zs, roots, ts, q, h)
        worst_fact = max(worst_fact, abs(a - b) / max(abs(a), 1e-300))
    return _check_report("ward_and_factorization", worst_ward < tol and worst_fact < 1e-10,
                         ward=worst_ward, factorization=worst_fact, configs=10)


def _polynomial(alg, P):
    """A1: list of coefficients; otherwise a string or a list of {coeff, exponents}."""
    from .corr import as_polynomial
    from .flagdiff import coordinates

    if isinstance(P, list) and P and isinstance(P[0], dict):
        xs = coordinates(alg)
        import sympy
        expr = 0
        for term in P:
            e = term.get("exponents", [])
            if len(e) != len(xs):
                raise ConfigError(f"exponents need {len(xs)} entries")
            expr += sympy.Rational(str(parse_number(term.get("coeff", 1), exact=True))) * sympy.Mul(
                *[v ** int(k) for v, k in zip(xs, e)])
        return expr
    if isinstance(P, (int, float)):
        P = [P]
    return as_polynomial(alg, P)


def cmd_correlator(cfg: dict, settings: dict) -> dict:
    from .corr import integrand

    alg = _algebra(cfg)
    for key in ("kappa", "q", "H", "weights", "points"):
        if key not in cfg:
            raise ConfigError(f"correlator needs {key!r}")
    kappa = parse_number(cfg["kappa"])
    q = _to_real_or_complex(cfg["q"])
    h = tuple(_to_real_or_complex(v) for v in cfg["H"])
    if len(h) != alg.rank:
        raise ConfigError("H needs one simple-root coordinate per simple root")
    lambdas = [_weight(w, alg.rank) for w in cfg["weights"]]
    zs = [_to_real_or_complex(z) for z in cfg["points"]]
    word = [int(i) for i in cfg.get("word", [])]
    ts = [_to_real_or_complex(t) for t in cfg.get("screening_points", [])]
    if len(ts) != len(word):
        raise ConfigError("one screening point per letter of the word")
    Ps = [_polynomial(alg, P) for P in cfg.get("polynomials", [[1]] * len(zs))]
    if len(Ps) != len(zs) or len(lambdas) != len(zs):
        raise ConfigError("weights, points and polynomials must have equal length")
    mu = _weight(cfg.get("mu", [0] * alg.rank), alg.rank)
    val = integrand(alg, kappa, q, h, lambdas, zs, word, ts, Ps, mu)
    out = val.as_dict()
    out.update({"algebra": alg.label, "word": word})
    return out


def cmd_kzb_residual(cfg: dict, settings: dict) -> dict:
    from .kzb import KZBConfig, kzb_residual

    fields = {}
    for key in ("kappa", "q", "alpha_h", "z1", "z2"):
        if key in cfg:
            fields[key] = parse_number(cfg[key])
    for key in ("panels", "nodes"):
        if key in cfg:
            fields[key] = int(cfg[key])
    for key in ("coincident", "normalization", "h_convention", "heat_sign"):
        if key in cfg:
            fields[key] = str(cfg[key])
    kcfg = KZBConfig(**fields)
    step = float(cfg.get("step", 1e-3))
    rep = kzb_residual(kcfg, step=step)
    out = rep.as_dict()
    out["config"] = {k: v for k, v in kcfg.__dict__.items() if k != "mu"}
    out["config"]["step"] = step
    budget_ii = settings["tol"] if settings["tol"] is not None else 1e-3
    out["budget"] = {"II": budget_ii, "III": 1e-2}
    out["within_budget"] = {"I": rep.residual_I == 0, "II": rep.residual_II < budget_ii,
                            "III": rep.residual_III < 1e-2}
    if cfg.get("enforce_budget", False) and not out["within_budget"]["II"]:
        raise BudgetError(f"(II') residual {rep.residual_II:.3e} exceeds {budget_ii}")
    return out


COMMANDS = {"theta": cmd_theta, "realize": cmd_realize, "verify": cmd_verify,
            "correlator": cmd_correlator, "kzb-residual": cmd_kzb_residual}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freefield-kzb", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--tol", type=float)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--threads", type=int, help="accepted for interface stability; work runs serially")
    p.add_argument("--output", choices=("json", "csv"))
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a top-level config key (value parsed as YAML)")
    return p


def _error(code: int, kind: str, message: str, stream) -> int:
    stream.write(dump_json({"schema_version": SCHEMA_VERSION, "error": kind, "message": message,
                            "exit_code": code}))
    return code


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    from .corr import CorrelatorError
    from .fock import FockError
    from .lie import LieError
    from .kzb import KZBError
    from .special import SpecialError
    from .wakimoto import WakimotoError

    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        cfg_path = args.config or os.environ.get(ENV_PREFIX + "CONFIG")
        cfg = load_config(cfg_path)
        section = cfg.get(args.subcommand, {})
        if not isinstance(section, dict):
            raise ConfigError(f"section {args.subcommand!r} must be a mapping")
        merged = {k: v for k, v in cfg.items() if k not in SUBCOMMANDS}
        merged.update(section)
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            merged[k.strip()] = yaml.safe_load(v)
        settings = resolve_settings(args, merged)
    except (ConfigError, yaml.YAMLError) as exc:
        return _error(EXIT_PARSE, "parse", str(exc), stderr)
    try:
        payload = COMMANDS[args.subcommand](merged, settings)
    except CheckFailed as exc:
        payload, code = exc.report, EXIT_CHECK_FAILED
    except ConfigError as exc:
        return _error(EXIT_PARSE, "parse", str(exc), stderr)
    except BudgetError as exc:
        return _error(EXIT_BUDGET, "budget", str(exc), stderr)
    except KZBError as exc:
        return _error(EXIT_BUDGET, "budget", str(exc), stderr)
    except (CorrelatorError, FockError, LieError, SpecialError, WakimotoError, ValueError,
            ZeroDivisionError) as exc:
        return _error(EXIT_PRECONDITION, "precondition", str(exc), stderr)
    else:
        code = EXIT_OK
    payload = {"schema_version": SCHEMA_VERSION, "subcommand": args.subcommand, **payload}
    text = dump_csv(payload) if settings["output"] == "csv" else dump_json(payload)
    stdout.write(text)
    return code


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
