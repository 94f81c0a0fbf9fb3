"""Command-line entry point: ``chainkit <subcommand> [flags]``.

Reports are canonical JSON (sorted keys, fixed float repr) so equal configs
give byte-identical output. Wall-clock times only go into ``--record``
files, never into the report.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io as _io
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .certificates import _plain
from .chaining import build_chaining_measure, check_M_bound, check_nu_normalised
from .errors import ChainkitError, VersionMismatch
from .fleet import fleet_lemma_rows, generate_fleet, lemma_suite
from .io import load_space, parse_model, parse_orlicz, _load_json_arg
from .majorant import profile, radii_table
from .orlicz import (
    PsiParams,
    coefficient,
    constants_AB,
    power_constants,
    power_membership_value,
)
from .process import (
    gaussian_from_metric,
    max_admissible_scale,
    verify_net_expected_range,
    verify_range_moment,
    verify_expected_range_32s,
    verify_expected_range,
    verify_expected_psi_range,
)
from .sobolev import SuiteConfig, default_psi, random_function_suite

SUBCOMMANDS = ("profile", "chain", "lemmas", "verify-sobolev", "verify-process", "constants", "replay")
FORMATS = ("json", "csv", "text")


@dataclass
class RunConfig:
    subcommand: str
    space: str | None = None
    measure: str | None = None
    orlicz: str = "power:2"
    model: str = "embed-euclidean"
    R: float = 4.0
    a: float = 1.0
    b: float = 1.0
    p: float | None = None
    psi: str | None = None
    alpha: float | None = None
    beta: float | None = None
    trials: int | None = None
    seed: int = 0
    fleet: str | None = None
    subset_frac: float = 0.5
    emit_nu: str | None = None
    format: str = "json"
    out: str | None = None
    # excluded from the digest: output must not depend on it
    threads: int | None = None

    def replay_fields(self) -> dict:
        data = asdict(self)
        for key in ("threads", "out", "emit_nu", "format"):
            data.pop(key)
        return data

    def digest(self) -> str:
        blob = json.dumps(self.replay_fields(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


@dataclass
class RunRecord:
    config: RunConfig
    payload: dict
    checks: list = field(default_factory=list)
    version: str = __version__

    @property
    def violations(self) -> list:
        return [c for c in self.checks if not c["pass"]]

    @property
    def passed(self) -> bool:
        return not self.violations

    def report(self) -> dict:
        return {
            "tool": "chainkit",
            "version": self.version,
            "subcommand": self.config.subcommand,
            "config_digest": self.config.digest(),
            "summary": {"checks": len(self.checks), "violations": len(self.violations), "pass": self.passed},
            "checks": self.checks,
            "payload": self.payload,
        }


def canonical_json(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(obj):
    obj = _plain(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _space(cfg: RunConfig):
    if not cfg.space:
        raise ChainkitError(f"{cfg.subcommand} needs --space FILE (or bundled:two_point)")
    return load_space(cfg.space, cfg.measure)


def _check(name, passed, **info) -> dict:
    return {"name": name, "pass": bool(passed), **info}


def _cert_check(cert) -> dict:
    d = cert.to_dict()
    return _check(d["name"], d["pass"], lhs=d["lhs"], rhs=d["rhs"], slack=d["slack"], witness=d["witness"])


def run_profile(cfg: RunConfig) -> RunRecord:
    space, measure = _space(cfg)
    fn = parse_orlicz(cfg.orlicz)
    prof = profile(space, measure, fn)
    radii = radii_table(space, measure, fn, cfg.R)
    payload = {"fn": fn.to_spec(), "R": cfg.R, "n": space.n, "diameter": space.diameter,
               "sigma": prof.sigma.tolist(), "S": prof.S, "Sbar": prof.Sbar,
               "k0": radii.k0, "kmax": radii.kmax, "radii": radii.to_dict()}
    return RunRecord(cfg, payload)


def run_chain(cfg: RunConfig) -> RunRecord:
    space, measure = _space(cfg)
    fn = parse_orlicz(cfg.orlicz)
    cm = build_chaining_measure(space, measure, fn, cfg.R)
    prof = profile(space, measure, fn)
    nu = cm.to_dict()
    if cfg.emit_nu:
        Path(cfg.emit_nu).write_text(canonical_json(nu))
    checks = [_cert_check(check_nu_normalised(cm)), _cert_check(check_M_bound(cm, prof, cfg.R))]
    return RunRecord(cfg, {"fn": fn.to_spec(), "nu": nu}, checks)


def run_lemmas(cfg: RunConfig) -> RunRecord:
    if cfg.space:
        space, measure = _space(cfg)
        rows = lemma_suite(space, measure, parse_orlicz(cfg.orlicz), cfg.R, cfg.seed)
        meta = {"space": cfg.space}
    else:
        spec = {"count": 200, "max_n": 40}
        if cfg.fleet:
            spec.update(_load_json_arg(cfg.fleet))
        spec.setdefault("seed", cfg.seed)
        cases = generate_fleet(int(spec["count"]), int(spec["seed"]), int(spec["max_n"]))
        rows = fleet_lemma_rows(cases, cfg.seed)
        meta = {"fleet": spec}
    table = [r.to_dict() for r in rows]
    checks = [_check(f"{r['lemma']}[case={r['case']}]", r["pass"], witness=r["witness"],
                     lhs=r["lhs"], rhs=r["rhs"], slack=r["slack"]) for r in table]
    return RunRecord(cfg, {**meta, "rows": table}, checks)


def _psi_params(cfg: RunConfig, fn):
    if cfg.psi is None and cfg.alpha is None and cfg.beta is None:
        return default_psi(fn)
    psi = parse_orlicz(cfg.psi) if cfg.psi else fn
    return PsiParams(psi, 0.0 if cfg.alpha is None else cfg.alpha, 1.0 if cfg.beta is None else cfg.beta)


def run_verify_sobolev(cfg: RunConfig) -> RunRecord:
    space, measure = _space(cfg)
    fn = parse_orlicz(cfg.orlicz)
    trials = 1000 if cfg.trials is None else cfg.trials
    powers = (cfg.p,) if cfg.p is not None else (1.5, 2.0, 3.0)
    sc = SuiteConfig(trials=trials, seed=cfg.seed, R=cfg.R, a=cfg.a, b=cfg.b, psi=_psi_params(cfg, fn),
                     powers=powers)
    rep = random_function_suite(space, measure, fn, sc).to_dict()
    checks = [_check(name, st["violations"] == 0, violations=st["violations"], min_slack=st["min_slack"],
                     witness=st["worst_witness"]) for name, st in rep["inequalities"].items()]
    return RunRecord(cfg, rep, checks)


def run_verify_process(cfg: RunConfig) -> RunRecord:
    space, measure = _space(cfg)
    fn = parse_orlicz(cfg.orlicz)
    kind, params = parse_model(cfg.model)
    scale = params.pop("scale", "auto")
    base = gaussian_from_metric(space, kind, params)
    trials = 10_000 if cfg.trials is None else cfg.trials
    p = 2.0 if cfg.p is None else cfg.p
    th = cfg.threads

    def scaled(q):
        if scale != "auto":
            return base.with_scale(float(scale))
        lam = max_admissible_scale(base, space, q)
        return base.with_scale(1.0 if math.isinf(lam) else lam)

    p_fn = fn.p if fn.kind in ("identity", "power") else 1.0
    checks, diag = [], {"model": kind, "trials": trials, "n": space.n}
    steps = [
        ("expected_range_32s", lambda s: verify_expected_range_32s(space, measure, scaled(p), p, trials, s, th)),
        ("expected_psi_range", lambda s: verify_expected_psi_range(space, measure, scaled(p_fn), fn, _psi_params(cfg, fn),
                                             cfg.a, cfg.b, cfg.R, trials, s, th)),
        ("range_moment", lambda s: verify_range_moment(space, measure, scaled(p), p, trials, s, th)),
    ]
    if fn.young:
        steps.insert(1, ("expected_range", lambda s: verify_expected_range(space, measure, scaled(p_fn), fn, cfg.a, cfg.b,
                                                             cfg.R, trials, s, th)))
    rng = np.random.default_rng([cfg.seed, 99])
    k = max(1, int(round(cfg.subset_frac * space.n)))
    subset = np.sort(rng.choice(space.n, size=min(k, space.n), replace=False))
    steps.append(("net_expected_range", lambda s: verify_net_expected_range(space, measure, scaled(p_fn), fn, cfg.a, cfg.b,
                                                            cfg.R, subset, trials, s, th)))
    for j, (name, step) in enumerate(steps):
        try:
            checks.append(_cert_check(step([cfg.seed, j])))
        except ChainkitError as exc:
            checks.append(_check(name, False, error=type(exc).__name__, witness={"message": str(exc)}))
    return RunRecord(cfg, diag, checks)


def _frac(x) -> dict:
    if isinstance(x, Fraction):
        return {"exact": str(x), "value": float(x)}
    return {"exact": None, "value": float(x)}


def run_constants(cfg: RunConfig) -> RunRecord:
    payload = {}
    if cfg.p is None or cfg.R != 4.0:
        R = Fraction(cfg.R).limit_denominator(10**6) if float(cfg.R).is_integer() else cfg.R
        A, B = constants_AB(R)
        AB = A + B
        payload["R"] = {"R": cfg.R, "A": _frac(A), "B": _frac(B), "A_plus_B": _frac(AB),
                        "coefficient": coefficient(cfg.a, cfg.b, R), "a": cfg.a, "b": cfg.b,
                        "expectation_factor": 2 * coefficient(cfg.a, cfg.b, R)}
    if cfg.p is not None:
        pc = power_constants(cfg.p)
        entry = pc._asdict()
        if cfg.p > 1:
            entry["membership"] = power_membership_value(cfg.p, pc.a, pc.b)
        payload["p"] = {"p": cfg.p, **entry}
    return RunRecord(cfg, payload)


RUNNERS = {
    "profile": run_profile,
    "chain": run_chain,
    "lemmas": run_lemmas,
    "verify-sobolev": run_verify_sobolev,
    "verify-process": run_verify_process,
    "constants": run_constants,
}


def dispatch(cfg: RunConfig) -> RunRecord:
    try:
        runner = RUNNERS[cfg.subcommand]
    except KeyError:
        raise ChainkitError(f"unknown subcommand {cfg.subcommand!r}") from None
    return runner(cfg)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

CSV_FIELDS = ("name", "pass", "lhs", "rhs", "slack", "violations", "min_slack", "witness")


def render(record: RunRecord, fmt: str) -> str:
    rep = record.report()
    if fmt == "json":
        return canonical_json(rep)
    if fmt == "csv":
        rows = record.payload.get("rows")
        buf = _io.StringIO()
        if rows is not None:
            cols = ("case", "lemma", "checks", "violations", "lhs", "rhs", "slack", "pass", "witness")
            src = rows
        else:
            cols, src = CSV_FIELDS, rep["checks"]
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in src:
            row = dict(row)
            row["witness"] = json.dumps(_clean(row.get("witness", {})), sort_keys=True)
            w.writerow(row)
        return buf.getvalue()
    lines = [f"chainkit {rep['version']} {rep['subcommand']} digest={rep['config_digest'][:12]}"]
    p = record.payload
    if "S" in p:
        lines.append(f"S = {p['S']:.10g}  Sbar = {p['Sbar']:.10g}  k0 = {p['k0']}  kmax = {p['kmax']}")
        lines += [f"  sigma[{i}] = {s:.10g}" for i, s in enumerate(p["sigma"])]
    if "R" in p and isinstance(p["R"], dict):
        c = p["R"]
        lines.append(f"R = {c['R']:g}: A = {c['A']['exact'] or c['A']['value']}, "
                     f"B = {c['B']['exact'] or c['B']['value']}, A+B = {c['A_plus_B']['exact'] or c['A_plus_B']['value']}")
    if "p" in p and isinstance(p["p"], dict):
        c = p["p"]
        lines.append(f"p = {c['p']:g}: R_p = {c['R']:.12g}, a_p = {c['a']:.12g}, b_p = {c['b']:.12g}, "
                     f"Kcoef = {c['kcoef']:.12g}")
    for c in rep["checks"]:
        mark = "PASS" if c["pass"] else "FAIL"
        detail = f" lhs={c['lhs']:.6g} rhs={c['rhs']:.6g}" if "lhs" in c else ""
        lines.append(f"[{mark}] {c['name']}{detail}")
    s = rep["summary"]
    lines.append(f"{s['checks']} checks, {s['violations']} violations")
    return "\n".join(lines) + "\n"


def record_document(record: RunRecord, started: str, finished: str) -> dict:
    return {"config": asdict(record.config), "version": record.version, "started": started,
            "finished": finished, "report": record.report()}


def replay(path: str, seed: int | None = None) -> tuple[RunRecord, bool]:
    """Re-run a recorded config; True when the payload matches bit for bit."""
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != __version__:
        warnings.warn(f"record written by chainkit {doc.get('version')}, running {__version__}", VersionMismatch)
    cfg = RunConfig.from_dict(doc["config"])
    if seed is not None:
        cfg.seed = seed
    cfg.emit_nu = None
    rec = dispatch(cfg)
    same = canonical_json(rec.report()) == canonical_json(doc["report"])
    return rec, same


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chainkit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"chainkit {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, orlicz=True, trials=False):
        p.add_argument("--space", help="space JSON file, inline JSON, or bundled:NAME")
        p.add_argument("--measure", help="weights JSON (file or inline) or 'uniform'")
        if orlicz:
            p.add_argument("--orlicz", default="power:2", help="identity | power:P | JSON | file")
        p.add_argument("--R", type=float, default=4.0)
        p.add_argument("--a", type=float, default=1.0)
        p.add_argument("--b", type=float, default=1.0)
        p.add_argument("--p", type=float)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, help="worker threads (default: $CHAINKIT_THREADS or 1)")
        p.add_argument("--format", choices=FORMATS, default="json")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--record", help="also write a replayable run record")
        if trials:
            p.add_argument("--trials", type=int)
            p.add_argument("--psi", help="psi as an Orlicz spec")
            p.add_argument("--alpha", type=float)
            p.add_argument("--beta", type=float)

    common(sub.add_parser("profile", help="sigma, S, Sbar and the radii table"))
    chain = sub.add_parser("chain", help="build the chaining measure nu")
    common(chain)
    chain.add_argument("--emit-nu", dest="emit_nu", help="write nu as JSON")
    lem = sub.add_parser("lemmas", help="exact chaining lemmas on a space or a fleet")
    common(lem)
    lem.add_argument("--fleet", help='fleet spec, e.g. {"count": 200, "seed": 0, "max_n": 40}')
    common(sub.add_parser("verify-sobolev", help="Sobolev-type inequalities on random functions"), trials=True)
    proc = sub.add_parser("verify-process", help="expected-supremum bounds for Gaussian models")
    common(proc, trials=True)
    proc.add_argument("--model", default="embed-euclidean",
                      help='embed-euclidean | brownian-path | JSON {"kind": ..., "scale": "auto"}')
    proc.add_argument("--subset-frac", dest="subset_frac", type=float, default=0.5)
    const = sub.add_parser("constants", help="A(R), B(R) and the power-function optimum")
    common(const, orlicz=False)
    rp = sub.add_parser("replay", help="re-run a --record file and compare")
    rp.add_argument("record_file")
    rp.add_argument("--seed", type=int, help="override the recorded seed")
    rp.add_argument("--format", choices=FORMATS, default="json")
    rp.add_argument("--out")
    return ap


def _config_from_args(ns: argparse.Namespace) -> RunConfig:
    names = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in vars(ns).items() if k in names and v is not None})


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _print_violations(record: RunRecord) -> None:
    for v in record.violations:
        print(f"violation: {v['name']} witness={json.dumps(_clean(v.get('witness', {})), sort_keys=True)}",
              file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.subcommand == "replay":
            rec, same = replay(ns.record_file, ns.seed)
            _emit(render(rec, ns.format), ns.out)
            _print_violations(rec)
            if not same:
                print("replay: report differs from the record (not a faithful replay)", file=sys.stderr)
            return 0 if (same and rec.passed) else 1
        cfg = _config_from_args(ns)
        started = datetime.now(timezone.utc).isoformat()
        rec = dispatch(cfg)
        finished = datetime.now(timezone.utc).isoformat()
        _emit(render(rec, cfg.format), cfg.out)
        if getattr(ns, "record", None):
            Path(ns.record).write_text(canonical_json(record_document(rec, started, finished)))
        _print_violations(rec)
        return 0 if rec.passed else 1
    except (ChainkitError, ValueError, OSError) as exc:
        print(f"chainkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
