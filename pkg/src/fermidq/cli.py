"""Command-line entry point: ``fermidq {starexp,propagator,fkac,spectrum,verify}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .feynman_kac import FKConfig, Route, fk_report, running_E0, tau_grid
from .grassmann import GrassmannElement
from .models import CouplingMode, ModelKind, ModelSpec, hamiltonian, propagator, spectrum_table
from .starexp import (
    closed_form_driven,
    closed_form_fermi,
    compare,
    driven_couplings,
    starexp_from_propagator,
    starexp_oracle,
    starexp_series,
    transform_signature,
)

EXIT_OK, EXIT_ERROR, EXIT_DISCREPANT = 0, 1, 2


class SpecError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None, col: Optional[int] = None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)


# ---------------------------------------------------------------------------
# spec files

_KEYS = ("model", "omega", "hbar", "g", "coupling_mode")


def parse_complex(text: str) -> complex:
    """``re+imi``; ``j`` is accepted in place of ``i``."""
    s = text.strip().replace(" ", "")
    if s.endswith("i"):
        s = s[:-1] + "j"
    try:
        z = complex(s)
    except ValueError:
        raise ValueError(f"not a complex number: {text!r}") from None
    if "(" in s or not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"not a complex number: {text!r}")
    return z


def _real(value: str, key: str, line: int, col: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise SpecError(f"{key} expects a real number, got {value!r}", line, col) from None
    if not math.isfinite(x):
        raise SpecError(f"{key} must be finite", line, col)
    return x


def parse_spec(text: str) -> ModelSpec:
    """Parse ``key=value`` assignments separated by newlines or commas."""
    seen: dict[str, tuple[str, int, int]] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        pos = 0
        for chunk in line.split(","):
            col = pos + 1 + (len(chunk) - len(chunk.lstrip()))
            pos += len(chunk) + 1
            if not chunk.strip():
                continue
            if "=" not in chunk:
                raise SpecError(f"expected key=value, got {chunk.strip()!r}", ln, col)
            key, value = (p.strip() for p in chunk.split("=", 1))
            if key not in _KEYS:
                raise SpecError(f"unknown key {key!r}", ln, col)
            if key in seen:
                raise SpecError(f"duplicate key {key!r}", ln, col)
            if not value:
                raise SpecError(f"empty value for {key!r}", ln, col)
            seen[key] = (value, ln, col + chunk.strip().index("=") + 1)

    if "model" not in seen:
        raise SpecError("missing key 'model'")
    model, ln, col = seen["model"]
    try:
        kind = ModelKind(model)
    except ValueError:
        raise SpecError(f"unknown model {model!r}", ln, col) from None
    if kind is ModelKind.CUSTOM:
        raise SpecError("custom models cannot be read from a spec file", ln, col)
    if "omega" not in seen:
        raise SpecError("missing key 'omega'")
    v, ln, col = seen["omega"]
    omega = _real(v, "omega", ln, col)
    hbar = 1.0
    if "hbar" in seen:
        v, ln, col = seen["hbar"]
        hbar = _real(v, "hbar", ln, col)
    if hbar <= 0:
        raise SpecError("hbar must be positive", *seen["hbar"][1:])

    g = None
    mode = CouplingMode.NUMERIC
    if kind is ModelKind.FERMI:
        for k in ("g", "coupling_mode"):
            if k in seen:
                raise SpecError(f"{k!r} does not apply to the Fermi oscillator", *seen[k][1:])
    else:
        if "coupling_mode" in seen:
            v, ln, col = seen["coupling_mode"]
            try:
                mode = CouplingMode(v)
            except ValueError:
                raise SpecError(f"coupling_mode must be numeric or strict, got {v!r}", ln, col) from None
        if "g" in seen:
            v, ln, col = seen["g"]
            try:
                g = parse_complex(v)
            except ValueError as exc:
                raise SpecError(str(exc), ln, col) from None
            if mode is CouplingMode.STRICT:
                raise SpecError("strict coupling uses Grassmann generators, drop 'g'", ln, col)
        elif mode is CouplingMode.NUMERIC:
            raise SpecError("the driven model needs g in numeric coupling mode")
    try:
        return ModelSpec(kind, omega, hbar, g, mode)
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def _fmt_complex(z: complex) -> str:
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


def serialize_spec(spec: ModelSpec) -> str:
    lines = [f"model={spec.kind.value}", f"omega={spec.omega!r}", f"hbar={spec.hbar!r}"]
    if spec.kind is ModelKind.DRIVEN:
        if spec.g is not None:
            lines.append(f"g={_fmt_complex(complex(spec.g))}")
        lines.append(f"coupling_mode={spec.coupling_mode.value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    count: int
    spacing: str

    def values(self) -> np.ndarray:
        if self.spacing == "linear" and self.lo == 0:
            # real-time grids may start at t = 0
            return np.linspace(0.0, self.hi, self.count)
        return tau_grid(self.lo, self.hi, self.count, self.spacing)


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    spec_path: Path
    tau: Grid
    t: Grid
    routes: tuple[Route, ...]
    tol: float
    order: int
    fmt: str
    out: Optional[Path]


def _num(x: float):
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.12e}")


def _cnum(z: complex) -> list:
    return [_num(z.real), _num(z.imag)]


def symbol_dict(f: GrassmannElement) -> dict:
    return {(" ".join(k) if k else "1"): _cnum(v) for k, v in sorted(f.terms().items())}


def _closed(spec: ModelSpec, t: complex) -> GrassmannElement:
    sig = spec.signature()
    if spec.kind is ModelKind.FERMI:
        return closed_form_fermi(spec.omega, spec.hbar, t, sig)
    a, ac, ab = driven_couplings(sig, None if spec.strict else spec.g)
    return closed_form_driven(spec.omega, spec.hbar, t, sig, a, ac, ab)


def _transform(spec: ModelSpec, t: complex) -> GrassmannElement:
    K = propagator(spec, linearized=spec.kind is ModelKind.DRIVEN)
    return starexp_from_propagator(K, t, spec.signature())


def _finding(location: str, report, note: str) -> dict:
    return {"location": location, "verdict": report.verdict, "max_residual": _num(report.max_residual),
            "a": report.label_a, "b": report.label_b, "note": note}


_LOCATIONS = {
    ModelKind.FERMI: "closed-form star-exponential of the Fermi oscillator",
    ModelKind.DRIVEN: "closed-form star-exponential of the driven Fermi oscillator",
}


def run_starexp(spec: ModelSpec, cfg: RunConfig):
    H = hamiltonian(spec)
    results = []
    for t in cfg.t.values():
        t = float(t)
        results.append({
            "t": _num(t),
            "oracle": symbol_dict(starexp_oracle(H.symbol, t, H.convention)),
            "closed_form": symbol_dict(_closed(spec, t)),
            "transform": symbol_dict(_transform(spec, t)),
        })
    return results, [], EXIT_OK


def run_propagator(spec: ModelSpec, cfg: RunConfig):
    ext, _, _ = transform_signature(spec.signature())
    pi_f, psi0 = [ext.pi(1)], [ext.psi(1)]
    closed = propagator(spec)
    oracle = propagator(spec, form="oracle")
    results = []
    for t in cfg.t.values():
        t = float(t)
        Kp, Ko = closed(pi_f, psi0, t), oracle(pi_f, psi0, t)
        rep = compare(Kp, Ko, cfg.tol, "closed-form propagator", "matrix oracle")
        results.append({"t": _num(t), "closed_form": symbol_dict(Kp), "oracle": symbol_dict(Ko),
                        "report": rep.to_dict()})
    return results, [], EXIT_OK


def run_fkac(spec: ModelSpec, cfg: RunConfig):
    rep = fk_report(spec, FKConfig(cfg.tau.values(), cfg.routes))
    d = rep.to_dict()
    return [d], [{"location": "ground-state energy from the imaginary-time trace", "note": n}
                 for n in rep.notes], EXIT_OK


def run_spectrum(spec: ModelSpec, cfg: RunConfig):
    if spec.kind is ModelKind.FERMI:
        e = abs(spec.omega) * spec.hbar / 2
        return [{"eigenvalues": [_num(-e), _num(e)]}], [], EXIT_OK
    if spec.strict:
        raise ValueError("spectrum needs a numeric coupling g")
    return [spectrum_table(spec.omega, abs(spec.g))], [], EXIT_OK


def run_verify(spec: ModelSpec, cfg: RunConfig):
    H = hamiltonian(spec)
    results, findings = [], []
    loc = _LOCATIONS[spec.kind]
    status = EXIT_OK
    for t in cfg.t.values():
        t = float(t)
        oracle = starexp_oracle(H.symbol, t, H.convention)
        closed = _closed(spec, t)
        trans = _transform(spec, t)
        series = starexp_series(H.symbol, t, cfg.order, H.convention)
        reps = [
            compare(closed, oracle, cfg.tol, "closed form", "oracle"),
            compare(trans, oracle, cfg.tol, "propagator transform", "oracle"),
            compare(series.value, oracle, cfg.tol, f"series order {cfg.order}", "oracle",
                    {"tail_bound": _num(series.tail_bound)}),
            compare(trans, closed, cfg.tol, "propagator transform", "closed form"),
        ]
        results.append({"t": _num(t), "reports": [r.to_dict() for r in reps]})
        for r in reps:
            if r.verdict == "DISCREPANT":
                status = EXIT_DISCREPANT
                findings.append(_finding(loc, r, f"t={_num(t)}"))
    return results, findings, status


RUNNERS = {
    "starexp": run_starexp,
    "propagator": run_propagator,
    "fkac": run_fkac,
    "spectrum": run_spectrum,
    "verify": run_verify,
}


# ---------------------------------------------------------------------------
# output


def render_json(spec: ModelSpec, results, findings) -> str:
    doc = {"version": __version__, "spec": spec.to_dict(), "results": results, "findings": findings}
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, complex):
        return _cnum(x)
    if isinstance(x, (float, np.floating)):
        return _num(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def render_csv(spec: ModelSpec, cfg: RunConfig) -> str:
    rep = fk_report(spec, FKConfig(cfg.tau.values(), cfg.routes))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["route", "tau", "re_z", "im_z", "abs_z", "log_abs_z", "running_e0"])
    for route, samples in sorted(rep.samples.items()):
        for s, e in zip(samples, running_E0(samples, spec.hbar)):
            z = s.Z
            w.writerow([route, repr(_num(s.tau)), repr(_num(z.real)), repr(_num(z.imag)),
                        repr(_num(abs(z))), repr(_num(s.log_abs)), "" if e is None else repr(_num(e))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fermidq", description="Fermionic deformation quantization toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--spec", required=True, type=Path, help="model spec file (key=value)")
        p.add_argument("--tau-min", type=float, default=0.5)
        p.add_argument("--tau-max", type=float, default=50.0)
        p.add_argument("--tau-points", type=int, default=32)
        p.add_argument("--tau-spacing", choices=("geometric", "linear"), default="geometric")
        p.add_argument("--t-min", type=float, default=0.1)
        p.add_argument("--t-max", type=float, default=1.0)
        p.add_argument("--t-points", type=int, default=4)
        p.add_argument("--t-spacing", choices=("geometric", "linear"), default="linear")
        p.add_argument("--routes", default="oracle,closed-form,propagator-transform",
                       help="comma-separated Feynman-Kac routes")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--order", type=int, default=12, help="star-power series order (verify)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", type=Path)
    return ap


def make_config(args) -> RunConfig:
    if args.tol <= 0:
        raise ValueError("--tol must be positive")
    if args.order < 0:
        raise ValueError("--order must be non-negative")
    try:
        routes = tuple(Route(r.strip()) for r in args.routes.split(",") if r.strip())
    except ValueError as exc:
        raise ValueError(f"--routes: {exc}") from None
    if not routes:
        raise ValueError("--routes is empty")
    if args.format == "csv" and args.subcommand != "fkac":
        raise ValueError("csv output is only available for fkac")
    tau = Grid(args.tau_min, args.tau_max, args.tau_points, args.tau_spacing)
    t = Grid(args.t_min, args.t_max, args.t_points, args.t_spacing)
    if args.t_points < 1 or args.t_max < args.t_min:
        raise ValueError("t grid needs t_min <= t_max and at least one point")
    tau.values()
    t.values()
    return RunConfig(args.subcommand, args.spec, tau, t, routes, args.tol, args.order, args.format, args.out)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        spec = parse_spec(cfg.spec_path.read_text(encoding="utf-8"))
        if cfg.fmt == "csv":
            text, status = render_csv(spec, cfg), EXIT_OK
        else:
            results, findings, status = RUNNERS[cfg.subcommand](spec, cfg)
            text = render_json(spec, results, findings)
        if cfg.out is not None:
            cfg.out.parent.mkdir(parents=True, exist_ok=True)
            cfg.out.write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return status
    except (OSError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"fermidq {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
