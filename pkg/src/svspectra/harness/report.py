"""Summaries of a record set and pass/fail checks against the acceptance thresholds."""
from __future__ import annotations

from collections import defaultdict
from typing import Optional, Sequence

import numpy as np

from ..limits import frechet_cdf, hill_estimator, kolmogorov_quantile, ks_distance, mean_measure
from .records import SCHEMA_VERSION, DiagnosticsRecord

FLAT_RTOL = 1e-12
WEYL_ATOL = 1e-9

# acceptance thresholds
DIAG_SHRINK = 0.5
PP_RTOL = 0.15
PP_RTOL_THINNED = 0.20
PP_X = (1.0, 2.0, 4.0)
PP_X_THINNED = (1.0, 2.0)
NEGATIVE_ZERO_FRACTION = 0.99
KS_MAX_LIGHT = 0.10  # alpha < 2
KS_MAX_HEAVY = 0.15  # alpha > 2, slower because of the centering
HILL_BAND = (0.8, 1.3)  # relative to alpha / 2
POSITIVE_FRACTION = 0.95
FMATRIX_MAX = 0.1
EV_MAX = 0.15
DEGENERATE_MAX = 0.05
LD_BAND = (0.8, 1.2)


def monotonicity(medians: Sequence[float]) -> dict:
    """Verdict on a sequence of per-``n`` medians, with the successive step ratios."""
    m = np.asarray(medians, dtype=float)
    if m.size < 2:
        return {"verdict": "single-point", "ratios": []}
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = [float(b / a) if a != 0 else None for a, b in zip(m, m[1:])]
    diffs = np.diff(m)
    scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny)
    if np.all(np.abs(diffs) <= FLAT_RTOL * scale):
        verdict = "flat"
    elif np.all(diffs < 0):
        verdict = "decreasing"
    elif np.all(diffs > 0):
        verdict = "increasing"
    else:
        verdict = "mixed"
    return {"verdict": verdict, "ratios": ratios}


def _summary(values: np.ndarray) -> dict:
    if values.size == 0:
        return {"count": 0}
    q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return {"count": int(values.size), "median": float(med), "q1": float(q1), "q3": float(q3),
            "mean": float(values.mean())}


def _collect(records: Sequence[DiagnosticsRecord]):
    by_n = defaultdict(list)
    for rec in records:
        by_n[rec.n].append(rec)
    return dict(sorted(by_n.items()))


def _values(recs, name: str) -> np.ndarray:
    return np.array([r.metrics[name] for r in recs if r.metrics.get(name) is not None], dtype=float)


def _check(checks: list, name: str, passed: bool, **detail) -> None:
    checks.append({"name": name, "passed": bool(passed), **detail})


def _decreasing_check(checks, name, per_metric, metric):
    verdict = per_metric[metric]["monotonicity"]["verdict"] if metric in per_metric else "missing"
    _check(checks, name, verdict == "decreasing", verdict=verdict)


def _last_median(per_metric, metric) -> Optional[float]:
    if metric not in per_metric:
        return None
    per_n = per_metric[metric]["per_n"]
    return per_n[max(per_n, key=int)].get("median")


def _first_median(per_metric, metric) -> Optional[float]:
    if metric not in per_metric:
        return None
    per_n = per_metric[metric]["per_n"]
    return per_n[min(per_n, key=int)].get("median")


def _below(value: Optional[float], bound: float) -> bool:
    return value is not None and value < bound


def convergence_report(records: Sequence[DiagnosticsRecord]) -> dict:
    """Per-``n`` quartiles, monotonicity verdicts, limit-law fits and acceptance checks."""
    records = list(records)
    report = {"schema_version": SCHEMA_VERSION, "experiment": None, "n_grid": [], "metrics": {},
              "checks": [], "passed": False}
    if not records:
        return report
    experiments = sorted({r.experiment for r in records})
    if len(experiments) > 1:
        raise ValueError(f"records mix experiments {experiments}")
    exp = experiments[0]
    by_n = _collect(records)
    report["experiment"] = exp
    report["n_grid"] = list(by_n)
    alpha = float(records[0].metrics.get("alpha", np.nan))

    names = sorted({k for r in records for k in r.metrics} - {"alpha"})
    per_metric = {}
    for name in names:
        per_n = {str(n): _summary(_values(recs, name)) for n, recs in by_n.items()}
        medians = [s["median"] for s in per_n.values() if s["count"]]
        flagged = {str(n): sum(1 for r in recs if name in r.flags) for n, recs in by_n.items()}
        per_metric[name] = {"per_n": per_n, "monotonicity": monotonicity(medians), "flagged": flagged}
    report["metrics"] = per_metric
    checks = report["checks"]
    last_n = max(by_n)
    last = by_n[last_n]

    if exp in ("diag-approx", "thinned-diag"):
        _decreasing_check(checks, "offdiag_ratio decreasing", per_metric, "offdiag_ratio")
        if exp == "diag-approx":
            first = _first_median(per_metric, "offdiag_ratio")
            final = _last_median(per_metric, "offdiag_ratio")
            _check(checks, "offdiag_ratio shrinks by half", first is not None and _below(final, DIAG_SHRINK * first),
                   first=first, last=final)
        excess = [r.metrics["weyl_gap"] - r.metrics["offdiag_ratio"] for r in records
                  if r.metrics.get("weyl_gap") is not None and r.metrics.get("offdiag_ratio") is not None]
        worst = float(max(excess)) if len(excess) == len(records) else None
        _check(checks, "weyl bound on every instance", worst is not None and worst <= WEYL_ATOL, worst_excess=worst)

    if exp in ("point-process", "thinned-pp"):
        thinned = exp == "thinned-pp"
        rtol = PP_RTOL_THINNED if thinned else PP_RTOL
        moments = _values(last, "moment")
        for x in PP_X_THINNED if thinned else PP_X:
            name = f"count_exceed@{x:g}"
            if name not in per_metric or moments.size == 0:
                continue
            moment = float(np.mean(moments))
            mean = float(np.mean(_values(last, name)))
            expected = mean_measure(alpha, moment, x)
            rel = abs(mean / expected - 1.0)
            _check(checks, f"mean count above {x:g}", rel <= rtol, n=last_n, mean=mean, expected=expected,
                   relative_error=rel)
        if alpha < 2:
            below = [k for k in per_metric if k.startswith("count_below@")]
            if below:
                smallest = min(below, key=lambda k: float(k.split("@")[1]))
                zero = float(np.mean(_values(last, smallest) == 0))
                _check(checks, "negative side empty", zero >= NEGATIVE_ZERO_FRACTION, metric=smallest,
                       zero_fraction=zero)

    if exp in ("thinned-diag", "thinned-pp"):
        _decreasing_check(checks, "bn_over_anp decreasing", per_metric, "bn_over_anp")

    if exp == "frechet-top":
        ks = {}
        for n, recs in by_n.items():
            x = _values(recs, "lambda1_normalized")
            if x.size:
                ks[str(n)] = {"distance": ks_distance(x, lambda t: frechet_cdf(alpha, t)),
                              "quantile_99": kolmogorov_quantile(x.size)}
        report["ks_frechet"] = ks
        bound = KS_MAX_LIGHT if alpha < 2 else KS_MAX_HEAVY
        dist = ks.get(str(last_n), {}).get("distance")
        _check(checks, "frechet KS distance", dist is not None and dist <= bound, n=last_n, distance=dist,
               bound=bound)

    if exp == "trace-tail":
        hill = {}
        for n, recs in by_n.items():
            x = _values(recs, "trace_normalized")
            positive = x[x > 0]
            try:
                est = hill_estimator(positive)
            except ValueError:
                est = None
            hill[str(n)] = {"hill_alpha": est, "positive_fraction": float(positive.size / max(x.size, 1))}
        report["hill"] = hill
        lo, hi = (f * alpha / 2 for f in HILL_BAND)
        est = hill[str(last_n)]["hill_alpha"]
        _check(checks, "hill tail index", est is not None and lo <= est <= hi, n=last_n, estimate=est,
               band=[lo, hi])
        pos = hill[str(last_n)]["positive_fraction"]
        _check(checks, "trace skewed right", pos >= POSITIVE_FRACTION, positive_fraction=pos)

    if exp == "fmatrix-eigen":
        _decreasing_check(checks, "fmatrix_gap decreasing", per_metric, "fmatrix_gap")
        final = _last_median(per_metric, "fmatrix_gap")
        _check(checks, "fmatrix_gap small", _below(final, FMATRIX_MAX), median=final)

    if exp == "eigenvector-loc":
        for name in sorted(k for k in per_metric if k.startswith("ev_error@")):
            _decreasing_check(checks, f"{name} decreasing", per_metric, name)
            final = _last_median(per_metric, name)
            _check(checks, f"{name} small", _below(final, EV_MAX), median=final)
            degenerate = sum(r.flags.get(name) == "degenerate" for r in records) / len(records)
            _check(checks, f"{name} rarely degenerate", degenerate < DEGENERATE_MAX, fraction=degenerate)

    if exp == "ld-ratio":
        lo, hi = LD_BAND
        for n, recs in by_n.items():
            flagged = any("ld_ratio" in r.flags for r in recs)
            values = _values(recs, "ld_ratio")
            ratio = float(np.mean(values)) if values.size and not flagged else None
            _check(checks, f"ld ratio at n={n}", ratio is not None and lo <= ratio <= hi, ratio=ratio,
                   underpowered=flagged)

    report["passed"] = bool(checks) and all(c["passed"] for c in checks)
    return report
