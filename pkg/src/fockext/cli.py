"""
Command-line entry point: ``fockext <mode> --config path [--out dir]``.

Modes: verify-calculus, expand, simulate, decay. The config is a JSON file
validated against CONFIG_SCHEMA before anything is computed. Outputs are
deterministic for a given config (the seed is echoed into every artifact),
and the exit status is nonzero iff a check of the run fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import analysis
from .expansion import GeometryJet, OrderError, closed_form_reference, expand
from .lab import (EmbeddingSpec, SetupError, WeightSpec, build_discrete_model, decay_fit,
                  default_degree, local_sup_kappa, operator_norms, projector_checks,
                  rescaled_compare)
from .polynomials import PolyKernel, VarSpec
from .suites import identity_suite, oracle_suite

SCHEMA_VERSION = "1.0"
MODES = ("verify-calculus", "expand", "simulate", "decay")
CSV_COLUMNS = ("p", "D", "quad_order", "cond", "res_norm", "ext_norm", "linf_ratio",
               "rescaled_err_r0", "rescaled_err_r1", "decay_c", "residual")

log = logging.getLogger("fockext")

_complex = {"type": "object", "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
            "additionalProperties": False}
_exps = {"type": "array", "items": {"type": "integer", "minimum": 0}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": list(MODES)},
        "n": {"type": "integer", "minimum": 1, "maximum": 3},
        "m": {"type": "integer", "minimum": 0},
        "p_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "basis_degree": {"type": ["integer", "null"], "minimum": 2},
        "quad_order": {"type": ["integer", "null"], "minimum": 4},
        "weight": {"type": "array", "items": {
            "type": "object", "required": ["z", "zb"], "additionalProperties": False,
            "properties": {"z": _exps, "zb": _exps, "re": {"type": "number"}, "im": {"type": "number"}}}},
        "embedding": {"type": "array", "items": {"type": "array", "items": {
            "type": "object", "required": ["w"], "additionalProperties": False,
            "properties": {"w": _exps, "re": {"type": "number"}, "im": {"type": "number"}}}}},
        "order": {"type": "integer", "minimum": 0},
        "jet": {"type": "object", "additionalProperties": False, "properties": {
            "A": {"type": "array"},
            "kappa": {"type": "array"},
            "bergman_ambient": {"type": "array"},
            "bergman_sub": {"type": "array"}}},
        "output": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "random_brackets": {"type": "integer", "minimum": 0},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "linf_samples": {"type": "integer", "minimum": 1},
        "decay_radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "decay_rays": {"type": "array", "items": {"type": "array", "items": _complex}},
    },
    "required": ["mode", "n", "m"],
}


@dataclass
class ExperimentConfig:
    """Validated run description. Defaults are the values used when a key is absent."""

    mode: str
    n: int
    m: int
    p_list: list = field(default_factory=lambda: [8, 16, 32])
    basis_degree: int | None = None      # None: default_degree(p, radius / sqrt(p))
    quad_order: int | None = None        # None: basis_degree + 20
    weight: list = field(default_factory=list)
    embedding: list = field(default_factory=list)
    order: int = 1
    jet: dict = field(default_factory=dict)
    output: str = "out"
    seed: int = 0
    random_brackets: int = 200
    radius: float = 1.0
    samples: int = 200
    linf_samples: int = 50
    decay_radii: list = field(default_factory=lambda: list(np.linspace(1.3, 2.6, 14)))
    decay_rays: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        jsonschema.validate(data, CONFIG_SCHEMA)
        cfg = cls(**data)
        if not cfg.m <= cfg.n:
            raise ValueError("need m <= n")
        if cfg.mode in ("simulate", "decay") and (cfg.n > 2 or cfg.m == cfg.n):
            raise ValueError("the lab supports n <= 2 and m < n")
        if cfg.mode == "expand" and cfg.m == cfg.n:
            raise ValueError("expansion needs m < n")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    # model inputs -------------------------------------------------------------

    def weight_spec(self) -> WeightSpec:
        terms = {}
        for t in self.weight:
            terms[(tuple(t["z"]), tuple(t["zb"]))] = complex(t.get("re", 0.0), t.get("im", 0.0))
        return WeightSpec(self.n, terms)

    def embedding_spec(self) -> EmbeddingSpec:
        comps = tuple({tuple(t["w"]): complex(t.get("re", 0.0), t.get("im", 0.0)) for t in c}
                      for c in self.embedding)
        return EmbeddingSpec(self.n, self.m, comps)

    def geometry_jet(self) -> GeometryJet:
        n, m = self.n, self.m
        j = self.jet
        if "A" in j:
            A = np.asarray(_complex_array(j["A"]), complex)
        elif self.embedding:
            A = self.embedding_spec().second_fundamental_form()
        else:
            A = None
        vY, vX = VarSpec(m, m, m), VarSpec(n, m, n)
        poly = lambda lst, v: [PolyKernel.from_json(t, v) for t in lst]
        return GeometryJet(n, m, A=A,
                           kappa=poly(j["kappa"], vY) if "kappa" in j else None,
                           bergman_ambient=poly(j["bergman_ambient"], vX) if "bergman_ambient" in j else None,
                           bergman_sub=poly(j["bergman_sub"], vY) if "bergman_sub" in j else None)


def _complex_array(x):
    """Nested lists whose leaves are numbers or {re, im} objects."""
    if isinstance(x, dict):
        return complex(x.get("re", 0.0), x.get("im", 0.0))
    if isinstance(x, list):
        return [_complex_array(v) for v in x]
    return complex(x)


# modes ----------------------------------------------------------------------------

def run_verify(cfg: ExperimentConfig) -> dict:
    checks = [c.to_dict() for c in identity_suite(cfg.n, cfg.m, cfg.seed)]
    oracle, structure = oracle_suite(cfg.random_brackets, seed=cfg.seed) if cfg.random_brackets else ([], [])
    failing = [c["name"] for c in checks if not c["passed"]]
    failing += [c.name for c in oracle + structure if not c.passed]
    return {
        "identities": checks,
        "oracle": {"count": len(oracle), "max_deviation": max((c.deviation for c in oracle), default=0.0),
                   "failing": [c.name for c in oracle if not c.passed]},
        "structure": {"count": len(structure), "failing": [c.name for c in structure if not c.passed]},
        "max_identity_deviation": max((c["deviation"] for c in checks), default=0.0),
        "failing": failing,
        "passed": not failing,
    }


def _uses_closed_form_inputs(cfg: ExperimentConfig) -> bool:
    return not any(k in cfg.jet for k in ("kappa", "bergman_ambient", "bergman_sub"))


def run_expand(cfg: ExperimentConfig) -> dict:
    jet = cfg.geometry_jet()
    try:
        perp, ext = expand(jet, cfg.order)
    except OrderError as exc:
        return {"error": str(exc), "passed": False}
    out = {"J_perp": perp.to_json(), "J_E": ext.to_json(), "passed": True}
    if cfg.order >= 1 and _uses_closed_form_inputs(cfg):
        d_perp = perp[1].max_abs_diff(closed_form_reference("J1_perp", jet))
        d_ext = ext[1].max_abs_diff(closed_form_reference("J1_E", jet))
        out["comparison"] = {"J1_perp_deviation": d_perp, "J1_E_deviation": d_ext}
        out["passed"] = d_perp < 1e-12 and d_ext < 1e-12
    if cfg.order >= 2:
        out["unverified_orders"] = list(range(2, cfg.order + 1))
    return out


def simulate_point(cfg: ExperimentConfig, p: float, weight, emb, series) -> dict:
    """Build one model and measure everything the run reports for it (one CSV row)."""
    D = cfg.basis_degree or default_degree(p, cfg.radius / np.sqrt(p))
    model = build_discrete_model(p, D, weight, emb, cfg.quad_order)
    row = {"p": p, "D": D, "quad_order": model.quad_order, "cond": model.cond}
    if cfg.mode == "simulate":
        row.update(operator_norms(model, cfg.linf_samples, cfg.seed))
        errs = rescaled_compare(model, series, cfg.radius, cfg.samples, cfg.seed, (0, 1))
        row["rescaled_err_r0"] = errs.get(0, float("nan"))
        row["rescaled_err_r1"] = errs.get(1, float("nan"))
        row["algebra"] = projector_checks(model, seed=cfg.seed)
        row["sup_kappa"] = local_sup_kappa(model)
    else:
        row.update(res_norm=float("nan"), ext_norm=float("nan"), linf_ratio=float("nan"),
                   rescaled_err_r0=float("nan"), rescaled_err_r1=float("nan"))
    rays = [np.array([complex(c.get("re", 0), c.get("im", 0)) for c in r]) for r in cfg.decay_rays] \
        or [np.eye(cfg.n)[-1].astype(complex)]
    fits = [decay_fit(model, np.zeros(cfg.n), r, cfg.decay_radii) for r in rays]
    row["decay_c"] = float(np.mean([f["c"] for f in fits]))
    row["residual"] = float(max(f["residual"] for f in fits))
    row["decay"] = [{"ray": [[z.real, z.imag] for z in r], "c": f["c"], "residual": f["residual"],
                     "dropped": f["dropped"],
                     "flat_inequality": bool(np.all(f["kernel"] <= np.exp(-f["dsum"])))}
                    for r, f in zip(rays, fits)]
    return row


def run_simulate(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    weight, emb = cfg.weight_spec(), cfg.embedding_spec()
    series = None
    if cfg.mode == "simulate":
        series, _ = expand(cfg.geometry_jet(), 1)
    rows = []
    for p in sorted(cfg.p_list):
        try:
            rows.append(simulate_point(cfg, p, weight, emb, series))
        except (SetupError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("p=%s aborted: %s", p, exc)
            rows.append({"p": p, "error": str(exc)})
    return rows, summarize(cfg, rows, weight, emb)


def summarize(cfg: ExperimentConfig, rows: list[dict], weight: WeightSpec, emb: EmbeddingSpec) -> dict:
    good = [r for r in rows if "error" not in r]
    checks = {"all_models_built": len(good) == len(rows)}
    summary = {"schema_version": SCHEMA_VERSION, "mode": cfg.mode, "seed": cfg.seed,
               "n": cfg.n, "m": cfg.m, "p_list": [r["p"] for r in rows],
               "errors": {str(r["p"]): r["error"] for r in rows if "error" in r}}
    ps = [r["p"] for r in good]
    codim = cfg.n - cfg.m
    if len(good) >= 2:
        dec = analysis.decay_constants([r["decay_c"] for r in good])
        summary["decay"] = dec
        checks["decay_constant"] = dec["passed"]
        if weight.flat and emb.flat:
            checks["flat_decay_inequality"] = all(d["flat_inequality"] for r in good for d in r["decay"])
    if cfg.mode == "simulate" and good:
        summary["res_norm_slope"] = analysis.loglog_slope(ps, [r["res_norm"] for r in good]) if len(good) > 1 else None
        summary["ext_norm_slope"] = analysis.loglog_slope(ps, [r["ext_norm"] for r in good]) if len(good) > 1 else None
        alg = max(max(v for k, v in r["algebra"].items()) for r in good)
        summary["algebra_max_deviation"] = alg
        checks["projector_algebra"] = alg <= analysis.ALGEBRA_TOL
        if weight.flat and emb.flat:
            flat = analysis.flat_norms(ps, [r["res_norm"] for r in good], [r["ext_norm"] for r in good], codim)
            summary["flat_norms"] = flat
            checks["flat_norms"] = flat["passed"]
        if not emb.flat and len(good) > 1:
            conv = analysis.convergence_slopes(ps, [r["rescaled_err_r0"] for r in good],
                                               [r["rescaled_err_r1"] for r in good])
            summary["rescaled_convergence"] = conv
            checks["rescaled_convergence"] = conv["passed"]
        if not weight.flat and len(good) > 1:
            s = float(np.sqrt(max(r["sup_kappa"] for r in good)))
            ratios = [r["ext_norm"] * r["p"] ** (codim / 2) for r in good]
            ext = analysis.extension_constant(ps, ratios, s)
            ext["sup_kappa_half"] = s
            summary["extension_norm"] = ext
            checks["extension_norm_constant"] = ext["passed"]
        if len(good) > 1:
            lin = analysis.linf_constant(ps, [r["linf_ratio"] for r in good])
            summary["linf"] = lin
            checks["linf_constant"] = lin["passed"]
    summary["checks"] = checks
    summary["passed"] = all(checks.values())
    return summary


# output ------------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c, float("nan"))) for c in CSV_COLUMNS])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def execute(cfg: ExperimentConfig, out_dir: Path) -> bool:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.mode.replace("-", "_")
    if cfg.mode == "verify-calculus":
        report = run_verify(cfg)
    elif cfg.mode == "expand":
        report = run_expand(cfg)
    else:
        rows, report = run_simulate(cfg)
        (out_dir / f"{stem}.csv").write_text(rows_to_csv(rows))
        report["rows"] = [{k: v for k, v in r.items() if k not in ("decay",)} for r in rows]
    report.update(schema_version=SCHEMA_VERSION, seed=cfg.seed, mode=cfg.mode)
    (out_dir / f"{stem}.json").write_text(dump_json(report))
    return bool(report.get("passed", False))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fockext", description=__doc__.strip().splitlines()[0])
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", default=None, help="output directory (default: config 'output')")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        data = json.loads(Path(args.config).read_text())
        data["mode"] = args.mode
        cfg = ExperimentConfig.from_dict(data)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError, ValueError) as exc:
        print(f"invalid config: {getattr(exc, 'message', exc)}", file=sys.stderr)
        return 2
    ok = execute(cfg, Path(args.out or cfg.output))
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
