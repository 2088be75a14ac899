"""Batch front door: parse scenario files, run checks and sweeps, write reports.

Exit codes: 0 all checks pass, 1 a checker reports failure, 2 the input file
is malformed or inconsistent, 3 an internal or execution error.  Reports are
JSON; tabular data goes to a side file in CSV (default) or JSON with every
number carrying 17 significant digits.  `CAUSALQ_TOL_OVERRIDES` may name a
tolerance file applied below any per-document overrides.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .causal import spacelike
from .config import DEFAULT, Tolerances, with_overrides
from .detectors import signal_noise_split, trace_norm, tripartite_order_count
from .errors import (CausalqError, ParseError, UnknownParameter,
                     UnknownPreset, ValidationError)
from .fv import (bostelmann_check, bostelmann_preset, cnot_preset,
                 corollary6_check, induced_observable, scattering_map)
from .histories import consistency_check, decoherence, fuksa_bipartite, fuksa_tripartite
from .qops import opnorm, sigma_x
from .random_ops import random_density, random_effect
from .scenarios import borsten_check, pauli_strings
from .scenarios import run as run_scenario
from .serial import (build_detector_pair, build_family, build_scenario,
                     build_tripartite, document_digest, fmt17, grid_values,
                     load_document)

# detector ground state in the monopole convention used by the lattice models
_GROUND = np.diag([0.0, 1.0]).astype(complex)


@dataclass
class CheckResult:
    name: str
    passed: bool | None          # None marks informational entries
    measured: float | None = None
    note: str = ""


@dataclass
class RunReport:
    """Deterministic run summary: inputs digest, checks, residuals, timings."""
    command: str
    path: str
    digest: str
    seed: int
    version: str = __version__
    checks: list[CheckResult] = field(default_factory=list)
    residuals: dict[str, float] = field(default_factory=dict)
    results: dict[str, float] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    rows: list[dict] | None = None
    columns: list[str] | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "input": self.path,
            "digest_sha256": self.digest,
            "seed": self.seed,
            "version": self.version,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed,
                        "measured": c.measured, "note": c.note}
                       for c in self.checks],
            "residuals": self.residuals,
            "results": self.results,
            "timings": self.timings,
        }


def _tolerances(doc: dict) -> Tolerances:
    tol = DEFAULT
    env = os.environ.get("CAUSALQ_TOL_OVERRIDES")
    try:
        if env:
            with open(env, "r", encoding="utf-8") as fh:
                tol = with_overrides(json.load(fh), tol)
        tol = with_overrides(doc.get("tolerances"), tol)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        raise ValidationError(f"bad tolerance overrides: {e}") from e
    return tol


def _write_report(rep: RunReport, out_dir: Path, stem: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.report.json"
    path.write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
    return path


def _write_rows(rep: RunReport, out_dir: Path, stem: str, fmt: str) -> Path | None:
    if not rep.rows:
        return None
    cols = rep.columns or list(rep.rows[0])
    out_dir.mkdir(parents=True, exist_ok=True)

    def cell(v):
        return v if isinstance(v, str) else fmt17(v)

    if fmt == "json":
        path = out_dir / f"{stem}.data.json"
        rows = [{k: r[k] if isinstance(r[k], str) else float(fmt17(r[k]))
                 for k in cols} for r in rep.rows]
        path.write_text(json.dumps(rows, indent=2) + "\n")
    else:
        path = out_dir / f"{stem}.data.csv"
        lines = [",".join(cols)]
        lines += [",".join(cell(r[k]) for k in cols) for r in rep.rows]
        path.write_text("\n".join(lines) + "\n")
    return path


def _payload(doc: dict) -> str:
    for key in ("operations", "family", "fv_preset", "detectors"):
        if key in doc:
            return key
    raise ValidationError("document has no payload section")


# -- execution branches -------------------------------------------------------

def _sweep_scenario(s, param: str, grid, threads: int) -> tuple[list[dict], list[str]]:
    def point(v: float) -> dict:
        out = run_scenario(s, {param: v})
        return {param: v, **out}

    with ThreadPoolExecutor(max_workers=threads) as ex:
        rows = list(ex.map(point, grid))
    cols = [param] + [k for k in rows[0] if k != param]
    return rows, cols


def _exec_operations(doc: dict, tol: Tolerances, rep: RunReport, threads: int) -> None:
    s = build_scenario(doc, tol)
    if s.sweep is not None:
        param, grid = s.sweep
        rep.rows, rep.columns = _sweep_scenario(s, param, grid, threads)
        for col in rep.columns[1:]:
            vals = [r[col] for r in rep.rows]
            rep.results[f"delta_max.{col}"] = max(abs(v - vals[0]) for v in vals)
    else:
        rep.results.update(run_scenario(s, {}))


def _exec_family(doc: dict, tol: Tolerances, rep: RunReport) -> None:
    fam, rho = build_family(doc, tol)
    dm = decoherence(fam, rho, tol)
    off = dm.matrix - np.diag(np.diag(dm.matrix))
    rep.residuals["histories.consistency.weak"] = float(np.abs(off.real).max())
    rep.residuals["histories.consistency.strong"] = float(np.abs(off).max())
    rep.results["probability_sum"] = float(dm.probabilities.sum())
    rows = []
    for i, a in enumerate(dm.alphas):
        for j, b in enumerate(dm.alphas):
            rows.append({"alpha": ".".join(map(str, a)),
                         "beta": ".".join(map(str, b)),
                         "re": float(dm.matrix[i, j].real),
                         "im": float(dm.matrix[i, j].imag)})
    rep.rows = rows
    rep.columns = ["alpha", "beta", "re", "im"]


def _exec_fv(doc: dict, tol: Tolerances, rep: RunReport, seed: int) -> None:
    spec = doc["fv_preset"]
    rng = np.random.default_rng(spec.get("seed", seed))
    if spec["name"] == "cnot":
        c, probe = cnot_preset()
        sm = scattering_map(c, probe)
        eps = induced_observable(sm, np.diag([0.0, 1.0]).astype(complex), tol=tol)
        target = np.kron(np.diag([0.0, 1.0]), np.eye(2))
        resid = float(opnorm(eps - target))
        rep.residuals["fv.induced.residual"] = resid
        rep.checks.append(CheckResult("fv.induced", resid <= tol.operator, resid))
        return
    c, p1, p2, o3 = bostelmann_preset(valid=spec.get("valid", True), rng=rng)
    bos = bostelmann_check(c, p1, p2, o3, rng=rng, enforce=False)
    rep.residuals["fv.bostelmann.residual"] = bos.residual
    rep.residuals["fv.bostelmann.state_spread"] = bos.state_spread
    rep.checks.append(CheckResult("fv.geometry", not bos.failed,
                                  float(len(bos.failed)), "; ".join(bos.failed)))
    rep.checks.append(CheckResult("fv.bostelmann", bos.residual <= tol.operator,
                                  bos.residual))
    d_sys = 2 ** c.n_sites
    cor = corollary6_check(c, random_density(d_sys, rng), p1, p2,
                           random_effect(p1.dim, rng), random_effect(p2.dim, rng),
                           tol)
    rep.residuals["fv.corollary6.residual"] = cor.residual
    rep.residuals["fv.corollary6.factorization"] = cor.factorization
    rep.residuals["fv.corollary6.probability_gap"] = cor.probability_gap
    rep.checks.append(CheckResult("fv.corollary6", cor.residual <= tol.operator,
                                  cor.residual))


def _exec_detectors(doc: dict, tol: Tolerances, rep: RunReport) -> None:
    if "pair" in doc["detectors"]:
        f, a, b = build_detector_pair(doc)
        # coherent sender state; a diagonal rho_A has zero monopole mean and
        # would null the cross term even for causally connected pairs
        plus = np.full((2, 2), 0.5, dtype=complex)
        ps = signal_noise_split(a, b, f, plus, _GROUND, tol=tol)
        resid = trace_norm(ps.signal)
        geo = "spacelike" if spacelike(a.region(f), b.region(f)) else "causally connected"
        rep.residuals["detector.signal_trace_norm"] = resid
        rep.checks.append(CheckResult("detector.no_signalling",
                                      resid <= tol.operator, resid,
                                      f"coupling regions {geo}"))
        return
    kick_fn, bridge, receiver, fb, max_order = build_tripartite(doc)
    orders = tripartite_order_count(kick_fn, bridge, receiver, fb, sigma_x,
                                    None if bridge is None else _GROUND,
                                    _GROUND, max_order)
    for k, v in sorted(orders.items()):
        rep.results[f"order{k}"] = float(v)


# -- commands -----------------------------------------------------------------

def cmd_run(args) -> RunReport:
    doc = load_document(args.file)
    tol = _tolerances(doc)
    rep = RunReport("run", str(args.file), document_digest(doc), args.seed)
    t0 = time.perf_counter()
    kind = _payload(doc)
    if kind == "operations":
        _exec_operations(doc, tol, rep, args.threads)
    elif kind == "family":
        _exec_family(doc, tol, rep)
    elif kind == "fv_preset":
        _exec_fv(doc, tol, rep, args.seed)
    else:
        _exec_detectors(doc, tol, rep)
    rep.timings["execute_s"] = time.perf_counter() - t0
    return rep


def cmd_check(args) -> RunReport:
    doc = load_document(args.file)
    tol = _tolerances(doc)
    rep = RunReport(f"check:{args.suite}", str(args.file), document_digest(doc),
                    args.seed)
    t0 = time.perf_counter()
    if args.suite == "borsten":
        _check_borsten(doc, tol, rep)
    elif args.suite == "fuksa":
        _check_fuksa(doc, tol, rep)
    elif args.suite == "fv":
        _exec_fv(doc, tol, rep, args.seed)
    else:
        _exec_detectors(doc, tol, rep)
        if not rep.checks:
            raise ValidationError("detector suite needs a detectors pair entry")
    rep.timings["execute_s"] = time.perf_counter() - t0
    return rep


def _check_borsten(doc: dict, tol: Tolerances, rep: RunReport) -> None:
    if "operations" not in doc:
        raise ValidationError("borsten suite needs an operations section")
    s = build_scenario(doc, tol)
    meas = [op for op in s.operations if op.kind == "measure"]
    kicks = [op for op in s.operations if op.kind == "kick"]
    obs = [op for op in s.operations if op.kind == "observe"]
    if not meas or not kicks or not obs:
        raise ValidationError(
            "borsten suite needs kick, measure, and observe operations")
    lab1 = sorted(kicks[0].operator.support or s.space.labels)
    lab3 = sorted(obs[0].operator.support or s.space.labels)
    alg1 = pauli_strings(s.space, lab1)
    alg3 = pauli_strings(s.space, lab3)
    ok, worst, witness = borsten_check(meas[0].operator, meas[0].bins,
                                       alg1, alg3, tol)
    note = ""
    if witness is not None:
        i1 = next(i for i, o in enumerate(alg1) if o is witness[0])
        i3 = next(i for i, o in enumerate(alg3) if o is witness[1])
        note = (f"witness: measured-average of {_pauli_name(i3, lab3)} "
                f"fails to commute with {_pauli_name(i1, lab1)}")
    rep.residuals["borsten.commutator"] = worst
    rep.checks.append(CheckResult("borsten.condition", ok, worst, note))


def _pauli_name(index: int, labels: list[str]) -> str:
    digits = []
    for _ in labels:
        digits.append("IXYZ"[index % 4])
        index //= 4
    return "".join(reversed(digits)) + "@" + ",".join(labels)


def _check_fuksa(doc: dict, tol: Tolerances, rep: RunReport) -> None:
    if "family" not in doc:
        raise ValidationError("fuksa suite needs a family section")
    fam, rho = build_family(doc, tol)
    res = fam.resolutions
    if len(res) == 2:
        out = fuksa_bipartite(res[0], res[1], rho, tol)
        shift = max(out.shifts)
        rep.residuals["fuksa.consistency"] = out.consistency
        rep.residuals["fuksa.marginal_shift"] = shift
        rep.checks.append(CheckResult(
            "fuksa.bipartite",
            out.consistency <= tol.operator and shift <= tol.operator,
            out.consistency))
    elif len(res) in (3, 4):
        extra = res[2] if len(res) == 4 else None
        out = fuksa_tripartite(res[0], res[1], res[-1], rho, extra=extra, tol=tol)
        rep.residuals["fuksa.worst_product"] = out.worst
        rep.residuals["fuksa.measurement_shift"] = out.measurement_shift
        rep.checks.append(CheckResult("fuksa.tripartite", out.passed, out.worst))
    else:
        raise ValidationError("fuksa suite needs a 2, 3, or 4 step family")


def cmd_sweep(args) -> RunReport:
    doc = load_document(args.file)
    if args.param is not None:
        doc = dict(doc)
        doc["sweep"] = {"param": args.param, "grid": _parse_grid(args.grid)}
    if "sweep" not in doc:
        raise ValidationError("no sweep section and no --param given")
    tol = _tolerances(doc)
    rep = RunReport("sweep", str(args.file), document_digest(doc), args.seed)
    t0 = time.perf_counter()
    kind = _payload(doc)
    if kind == "operations":
        _exec_operations(doc, tol, rep, args.threads)
    elif kind == "detectors" and "tripartite" in doc["detectors"]:
        _sweep_tripartite(doc, rep, args.threads)
    else:
        raise UnknownParameter(f"{kind} documents have no sweep parameters")
    rep.timings["execute_s"] = time.perf_counter() - t0
    return rep


def _sweep_tripartite(doc: dict, rep: RunReport, threads: int) -> None:
    param = doc["sweep"]["param"]
    if param != "coupling":
        raise UnknownParameter(f"tripartite sweeps support 'coupling', not {param!r}")
    kick_fn, bridge, receiver, fb, max_order = build_tripartite(doc)
    if bridge is None:
        raise UnknownParameter("no bridge detector whose coupling could be swept")
    grid = grid_values(doc["sweep"])

    def point(v: float) -> dict:
        orders = tripartite_order_count(kick_fn, replace(bridge, coupling=v),
                                        receiver, fb, sigma_x, _GROUND,
                                        _GROUND, max_order)
        return {"coupling": v, **{f"order{k}": float(w)
                                  for k, w in sorted(orders.items())}}

    with ThreadPoolExecutor(max_workers=threads) as ex:
        rep.rows = list(ex.map(point, grid))
    rep.columns = list(rep.rows[0])


def _parse_grid(spec: str | None):
    if not spec:
        raise ValidationError("--param needs a --grid specification")
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError("grid ranges are start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(v) for v in np.linspace(start, stop, count)]
    return [float(v) for v in spec.split(",")]


# -- entry point --------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="causalq",
                                description="no-signalling checks for measurement scenarios")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("check", cmd_check), ("sweep", cmd_sweep)):
        q = sub.add_parser(name)
        q.add_argument("file", type=Path)
        q.add_argument("--out", type=Path, default=Path("."))
        q.add_argument("--format", choices=("csv", "json"), default="csv")
        q.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        q.add_argument("--seed", type=int, default=0)
        if name == "check":
            q.add_argument("--suite", required=True,
                           choices=("borsten", "fuksa", "fv", "detector"))
        if name == "sweep":
            q.add_argument("--param")
            q.add_argument("--grid")
        q.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        rep = args.fn(args)
    except (ParseError, ValidationError, UnknownParameter, UnknownPreset,
            FileNotFoundError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    except CausalqError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    stem = Path(args.file).stem
    report_path = _write_report(rep, args.out, stem)
    data_path = _write_rows(rep, args.out, stem, args.format)
    for c in rep.checks:
        tag = "PASS" if c.passed else ("FAIL" if c.passed is False else "info")
        extra = f" ({c.note})" if c.note else ""
        val = "" if c.measured is None else f" measured={fmt17(c.measured)}"
        print(f"[{tag}] {c.name}{val}{extra}")
    for k, v in rep.residuals.items():
        print(f"{k} = {fmt17(v)}")
    print(f"report: {report_path}")
    if data_path is not None:
        print(f"data: {data_path}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
