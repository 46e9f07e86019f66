"""Named experiment suites with pass/fail criteria.

Each suite returns its criteria plus the report files it wants written.
Everything is seeded from the manifest, so reruns are byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import ks_2samp

from slicegap.analysis import (
    classify_lambda,
    discretize_Q,
    min_lambda_k,
    spectral_gap,
    wasserstein_coupling_ub,
    wasserstein_dual_lb,
)
from slicegap.io import coupled_csv, csv_text, json_text, write_atomic
from slicegap.rng import check_seed, stream
from slicegap.sampler import run_chain, run_coupled, run_level_chain
from slicegap.targets import TARGET_NAMES, make_bimodal, make_exponential, make_gaussian, make_gen_exponential, make_target, make_volcano

GAP_TOL = 0.02
DELTA_TOL = 0.005
KS_TOL = 0.015
REFINE_GRID = 1024


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentManifest:
    suite: str
    seed: int = 20240601
    samples: int = 100_000
    grid: int = 512
    steps: int = 20
    out: str | None = None
    targets: tuple = ()

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentManifest":
        if not isinstance(raw, dict) or not raw:
            raise ManifestError("manifest is empty")
        unknown = set(raw) - {"suite", "seed", "samples", "grid", "steps", "out", "targets"}
        if unknown:
            raise ManifestError(f"unknown manifest keys: {sorted(unknown)}")
        if "suite" not in raw:
            raise ManifestError("manifest needs a 'suite' entry")
        if raw["suite"] not in SUITES and raw["suite"] != "all":
            raise ManifestError(f"unknown suite {raw['suite']!r}; choose from {', '.join(SUITES)}")
        targets = []
        for entry in raw.get("targets", []):
            if not isinstance(entry, dict) or entry.get("name") not in TARGET_NAMES:
                raise ManifestError(f"unknown target {entry!r}")
            try:
                make_target(entry["name"], entry.get("dim", 1), entry.get("alpha"), entry.get("gamma"))
            except ValueError as exc:
                raise ManifestError(f"bad target {entry!r}: {exc}") from exc
            targets.append(dict(entry))
        m = cls(
            suite=raw["suite"],
            seed=check_seed(raw.get("seed", cls.seed)),
            samples=int(raw.get("samples", cls.samples)),
            grid=int(raw.get("grid", cls.grid)),
            steps=int(raw.get("steps", cls.steps)),
            out=raw.get("out"),
            targets=tuple(targets),
        )
        if m.samples < 2 or m.steps < 1 or not (16 <= m.grid <= 1024):
            raise ManifestError("need samples >= 2, steps >= 1 and 16 <= grid <= 1024")
        return m

    @classmethod
    def from_file(cls, path) -> "ExperimentManifest":
        text = Path(path).read_text()
        if not text.strip():
            raise ManifestError(f"manifest {path} is empty")
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)


@dataclass(frozen=True)
class Criterion:
    suite: str
    name: str
    value: float
    threshold: str
    passed: bool


@dataclass
class SuiteResult:
    suite: str
    criteria: list = field(default_factory=list)
    files: dict = field(default_factory=dict)

    def check(self, name: str, value, passed: bool, threshold: str):
        self.criteria.append(Criterion(self.suite, name, value, threshold, bool(passed)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)


def _target_label(tg) -> str:
    extra = "".join(f"_{k}{v:g}" for k, v in sorted(tg.params.items()) if k != "dim")
    return f"{tg.name}_d{tg.d}{extra}"


def gap_report(target, grid: int, k_max: int | None = None) -> dict:
    ell = target.ell
    k_min = min_lambda_k(ell, k_max or 2 * target.d)
    est = spectral_gap(discretize_Q(ell, grid))
    lower = None if k_min is None else 1.0 / (k_min + 1)
    return {
        "target": target.name,
        "dim": target.d,
        "params": target.params,
        "n": grid,
        "gap": est.gap,
        "refinement_delta": est.refinement_delta,
        "k_min": k_min,
        "lower_bound": lower,
        "satisfied": None if lower is None else est.gap >= lower - GAP_TOL,
    }


def wasserstein_report(target, x, y, reps: int, seed: int) -> dict:
    ub = wasserstein_coupling_ub(target, x, y, reps, seed)
    lb = wasserstein_dual_lb(target, x, y, reps, seed)
    return {
        "target": target.name,
        "dim": target.d,
        "x_norm": float(np.linalg.norm(x)),
        "y_norm": float(np.linalg.norm(y)),
        "ub": ub.value,
        "ub_se": ub.se,
        "lb": lb.value,
        "lb_se": lb.se,
        "contraction_bound": (1 - 1 / (target.d + 1)) * abs(np.linalg.norm(x) - np.linalg.norm(y)),
    }


def equality_case(m: ExperimentManifest) -> SuiteResult:
    res = SuiteResult("equality-case")
    d, alpha = 3, 1.0
    for entry in m.targets:
        if entry["name"] == "exponential":
            d, alpha = int(entry.get("dim", d)), float(entry.get("alpha") or alpha)
    tg = make_exponential(d, alpha)
    x = np.zeros(d)
    y = np.zeros(d)
    x[0], y[0] = 2.0, 0.5
    factor = d / (d + 1)
    expected = factor * 1.5
    rep = wasserstein_report(tg, x, y, m.samples, m.seed)
    stats = run_coupled(tg, x, y, m.steps, m.samples, m.seed)
    rep["decay"] = stats.decay
    res.files["equality_case.json"] = json_text(rep)
    res.files["equality_case_steps.csv"] = coupled_csv(stats)
    res.check("coupling_ub", rep["ub"], abs(rep["ub"] - expected) <= 0.02, f"{expected:.4g} +- 0.02")
    res.check("dual_lb", rep["lb"], abs(rep["lb"] - expected) <= 0.02, f"{expected:.4g} +- 0.02")
    res.check("decay", stats.decay, abs(stats.decay - factor) <= 0.02, f"{factor:.4g} +- 0.02")
    return res


def random_endpoints(d: int, pairs: int, rng, max_norm: float = 4.0):
    """Pairs of points with independent uniform directions and norms in (0, max_norm)."""
    out = []
    for _ in range(pairs):
        pts = []
        for _ in range(2):
            g = rng.standard_normal(d)
            pts.append(g / np.linalg.norm(g) * rng.uniform(0.1, max_norm))
        out.append(tuple(pts))
    return out


def gaussian_contraction(m: ExperimentManifest) -> SuiteResult:
    res = SuiteResult("gaussian-contraction")
    reports = []
    rng = stream(m.seed, 99)
    for d in (2, 4):
        tg = make_gaussian(d)
        for i, (x, y) in enumerate(random_endpoints(d, 5, rng)):
            ub = wasserstein_coupling_ub(tg, x, y, m.samples, m.seed + i)
            bound = (1 - 1 / (d + 1)) * abs(np.linalg.norm(x) - np.linalg.norm(y))
            reports.append({"dim": d, "x_norm": np.linalg.norm(x), "y_norm": np.linalg.norm(y),
                            "ub": ub.value, "ub_se": ub.se, "bound": bound})
            res.check(f"ub_d{d}_pair{i}", ub.value, ub.value <= bound + 3 * ub.se, "<= bound + 3 SE")
    x0 = np.zeros(4)
    y0 = np.zeros(4)
    x0[0], y0[1] = 3.0, 1.0
    stats = run_coupled(make_gaussian(4), x0, y0, 10, m.samples, m.seed)
    res.check("decay_d4", stats.decay, stats.decay <= 0.8 + 0.02, "<= 0.82")
    res.files["gaussian_contraction.json"] = json_text({"pairs": reports, "decay_d4": stats.decay})
    return res


def _gap_suite(name: str, default_targets: list, m: ExperimentManifest) -> SuiteResult:
    res = SuiteResult(name)
    targets = [make_target(s["name"], s.get("dim", 1), s.get("alpha"), s.get("gamma")) for s in m.targets]
    reports = []
    for tg in targets or default_targets:
        rep = gap_report(tg, m.grid)
        reports.append(rep)
        label = _target_label(tg)
        bound = rep["lower_bound"]
        res.check(f"gap_{label}", rep["gap"], bool(rep["satisfied"]),
                  f">= {bound:.4g} - {GAP_TOL}" if bound is not None else "no Lambda_k class found")
        fine = spectral_gap(discretize_Q(tg.ell, REFINE_GRID))
        rep["refinement_delta_1024"] = fine.refinement_delta
        res.check(f"delta_{label}", fine.refinement_delta, fine.refinement_delta < DELTA_TOL,
                  f"< {DELTA_TOL} (n={REFINE_GRID} vs {2 * REFINE_GRID})")
    res.files[f"{name.replace('-', '_')}.json"] = json_text(reports)
    return res


def bimodal_gap(m):
    return _gap_suite("bimodal-gap", [make_bimodal(2)], m)


def volcano_gap(m):
    res = _gap_suite("volcano-gap", [make_volcano(d) for d in (1, 2, 3)], m)
    k = min_lambda_k(make_volcano(3).ell, 6)
    res.check("k_min_volcano_d3", k, k == 1, "== 1")
    return res


def catalog_gap(m):
    default = [make_gaussian(4)] + [make_exponential(d) for d in range(1, 6)]
    return _gap_suite("catalog-gap", default, m)


def genexp_table(m: ExperimentManifest) -> SuiteResult:
    res = SuiteResult("genexp-table")
    rows = []
    wrong = 0
    for d in range(1, 6):
        for gamma in (0.5, 1.0, 2.0, 3.0):
            ell = make_gen_exponential(d, 1.0, gamma).ell
            predicted = math.ceil(d / gamma)
            for k in range(1, 11):
                member = classify_lambda(ell, k).member
                ok = member == (k >= predicted)
                wrong += not ok
                rows.append((d, gamma, k, member, k >= predicted, ok))
    res.files["genexp_table.csv"] = csv_text(["dim", "gamma", "k", "member", "predicted", "agree"], rows)
    res.check("membership_table", wrong, wrong == 0, "0 disagreements of 200")
    kv = min_lambda_k(make_volcano(3).ell, 6)
    kg = min_lambda_k(make_gaussian(4).ell, 8)
    res.check("k_min_volcano", kv, kv == 1, "== 1")
    res.check("k_min_gaussian_d4", kg, kg == 2, "== 2")
    return res


def level_invariance(m: ExperimentManifest) -> SuiteResult:
    res = SuiteResult("level-invariance")
    q1 = discretize_Q(make_volcano(1).ell, m.grid)
    q5 = discretize_Q(make_volcano(5).ell, m.grid)
    diff = float(np.max(np.abs(q1.P - q5.P)))
    res.check("volcano_Q_d1_vs_d5", diff, diff <= 1e-10, "<= 1e-10")
    tg = make_bimodal(2)
    x_chain = run_chain(tg, np.zeros(2), m.samples, m.seed)
    t_chain = run_level_chain(tg.ell, 0.25, m.samples, m.seed + 1, target_name=tg.name)
    ks = float(ks_2samp(x_chain.levels, t_chain.states).statistic)
    res.check("bimodal_T_marginal_ks", ks, ks < KS_TOL, f"< {KS_TOL}")
    res.files["level_invariance.json"] = json_text({"volcano_max_abs_diff": diff, "bimodal_ks": ks})
    return res


SUITES: dict[str, Callable[[ExperimentManifest], SuiteResult]] = {
    "equality-case": equality_case,
    "gaussian-contraction": gaussian_contraction,
    "bimodal-gap": bimodal_gap,
    "volcano-gap": volcano_gap,
    "catalog-gap": catalog_gap,
    "genexp-table": genexp_table,
    "level-invariance": level_invariance,
}


def run_suites(m: ExperimentManifest, out_dir: Path) -> list[SuiteResult]:
    names = list(SUITES) if m.suite == "all" else [m.suite]
    results = []
    for name in names:
        r = SUITES[name](replace(m, suite=name))
        for fname, text in r.files.items():
            write_atomic(out_dir / fname, text)
        results.append(r)
    rows = [
        (c.suite, c.name, c.value, c.threshold, "pass" if c.passed else "fail")
        for r in results for c in r.criteria
    ]
    write_atomic(out_dir / "summary.csv", csv_text(["suite", "criterion", "value", "threshold", "result"], rows))
    return results
