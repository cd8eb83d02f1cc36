"""Outcome statistics per workflow type and step regression.

All arithmetic runs on :class:`fractions.Fraction`, so noise-free planted
data is recovered exactly and decimal outcomes never pass through binary
floating point. Results are reported as canonical decimal strings.

Conventions:

* variance is the population variance, so one-record groups have 0;
* when every outcome is identical the regression reports ``r_squared = 0``;
* step-count columns that are constant across records are collinear with
  the intercept; they are dropped (with a warning) before solving;
* if the normal-equations matrix is still singular, a ridge term of
  ``1e-8`` is added to the slope diagonal and the report says so.
"""

from __future__ import annotations

import itertools
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .errors import InsufficientDataError, MissingOutcomeError, SingleUnitError
from .graph import canonical_decimal, format_decimal
from .tagger import WorkflowRecord

RIDGE_LAMBDA = Fraction(1, 10**8)


def to_decimal(q: Fraction) -> Decimal:
    """Exact when the fraction terminates in base 10, otherwise 28 significant digits."""
    with localcontext() as ctx:
        ctx.prec = 28
        d = Decimal(q.numerator) / Decimal(q.denominator)
    return canonical_decimal(d)


@dataclass(frozen=True)
class TypeStats:
    signature: tuple[str, ...]
    n: int
    mean: Fraction
    variance: Fraction

    @property
    def mean_outcome(self) -> Decimal:
        return to_decimal(self.mean)

    @property
    def variance_decimal(self) -> Decimal:
        return to_decimal(self.variance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "signature": list(self.signature),
            "n": self.n,
            "mean_outcome": format_decimal(self.mean_outcome),
            "variance": format_decimal(self.variance_decimal),
        }


def _require_outcomes(records: Sequence[WorkflowRecord]) -> None:
    for r in records:
        if r.outcome is None:
            raise MissingOutcomeError(f"record ({r.loop_id}, {r.iteration}) has no outcome")


def _stats(signature: tuple[str, ...], outcomes: Sequence[Fraction]) -> TypeStats:
    n = len(outcomes)
    mean = sum(outcomes, Fraction(0)) / n
    var = sum(((y - mean) ** 2 for y in outcomes), Fraction(0)) / n
    return TypeStats(signature, n, mean, var)


def type_stats(records: Sequence[WorkflowRecord]) -> list[TypeStats]:
    """Outcome mean and population variance per exact step-class sequence.

    Sorted by descending mean, ties broken by signature.
    """
    _require_outcomes(records)
    groups: dict[tuple[str, ...], list[Fraction]] = defaultdict(list)
    for r in records:
        if not r.steps:
            continue
        groups[r.signature].append(Fraction(r.outcome))  # type: ignore[arg-type]
    stats = [_stats(sig, ys) for sig, ys in groups.items()]
    return sorted(stats, key=lambda s: (-s.mean, s.signature))


@dataclass(frozen=True)
class RegressionReport:
    features: tuple[str, ...]
    coefficients: tuple[Fraction, ...]  # intercept first
    r_squared: Fraction
    n: int
    dropped: tuple[str, ...] = ()
    ridge: bool = False

    @property
    def intercept(self) -> Fraction:
        return self.coefficients[0]

    def coefficient(self, feature: str) -> Fraction:
        return self.coefficients[1 + self.features.index(feature)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "features": list(self.features),
            "coefficients": {
                "intercept": format_decimal(to_decimal(self.coefficients[0])),
                **{f: format_decimal(to_decimal(c)) for f, c in zip(self.features, self.coefficients[1:])},
            },
            "r_squared": format_decimal(to_decimal(self.r_squared)),
            "n": self.n,
            "dropped_constant_features": list(self.dropped),
            "ridge": {"used": self.ridge, "lambda": "0.00000001" if self.ridge else None},
        }


def solve_linear(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Gauss-Jordan elimination over the rationals; ``None`` when singular."""
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return None
        m[col], m[pivot] = m[pivot], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def step_counts(records: Sequence[WorkflowRecord]) -> tuple[list[str], list[Counter]]:
    counts = [Counter(r.signature) for r in records]
    classes = sorted(set().union(*counts)) if counts else []
    return classes, counts


def regress_steps(records: Sequence[WorkflowRecord]) -> RegressionReport:
    """OLS of outcome on per-class step counts, with intercept."""
    _require_outcomes(records)
    classes, counts = step_counts(records)
    n, p = len(records), len(classes)
    if n < p + 2:
        raise InsufficientDataError(f"{n} records for {p} step classes; need at least {p + 2}")
    ys = [Fraction(r.outcome) for r in records]  # type: ignore[arg-type]
    columns = {c: [Fraction(cnt[c]) for cnt in counts] for c in classes}
    dropped = tuple(c for c in classes if len(set(columns[c])) == 1)
    if dropped:
        warnings.warn(f"dropping constant step-count column(s): {', '.join(dropped)}", stacklevel=2)
    features = tuple(c for c in classes if c not in dropped)

    rows = [[Fraction(1)] + [columns[c][i] for c in features] for i in range(n)]
    k = len(features) + 1
    xtx = [[sum((row[i] * row[j] for row in rows), Fraction(0)) for j in range(k)] for i in range(k)]
    xty = [sum((row[i] * y for row, y in zip(rows, ys)), Fraction(0)) for i in range(k)]
    beta = solve_linear(xtx, xty)
    ridge = False
    if beta is None:
        ridge = True
        for i in range(1, k):
            xtx[i][i] += RIDGE_LAMBDA
        beta = solve_linear(xtx, xty)
        assert beta is not None

    mean = sum(ys, Fraction(0)) / n
    ss_tot = sum(((y - mean) ** 2 for y in ys), Fraction(0))
    if ss_tot == 0:
        r2 = Fraction(0)
    else:
        fitted = [sum((b * x for b, x in zip(beta, row)), Fraction(0)) for row in rows]
        ss_res = sum(((y - f) ** 2 for y, f in zip(ys, fitted)), Fraction(0))
        # OLS (and ridge with a free intercept) never fits worse than the mean
        r2 = 1 - ss_res / ss_tot
    return RegressionReport(features, tuple(beta), r2, n, dropped, ridge)


@dataclass(frozen=True)
class UnitDelta:
    signature: tuple[str, ...]
    means: Mapping[str, Fraction]
    delta: Fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "signature": list(self.signature),
            "means": {u: format_decimal(to_decimal(m)) for u, m in sorted(self.means.items())},
            "max_delta": format_decimal(to_decimal(self.delta)),
        }


@dataclass(frozen=True)
class UnitComparison:
    per_unit: Mapping[str, list[TypeStats]]
    deltas: list[UnitDelta] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_unit": {u: [s.to_dict() for s in st] for u, st in sorted(self.per_unit.items())},
            "deltas": [d.to_dict() for d in self.deltas],
        }


def compare_units(groups: Mapping[str, Sequence[WorkflowRecord]]) -> UnitComparison:
    """Per-unit type statistics and, for shared signatures, the widest gap in means."""
    if len(groups) < 2:
        raise SingleUnitError(f"need at least two units to compare, got {len(groups)}")
    per_unit = {u: type_stats(rs) for u, rs in groups.items()}
    by_sig: dict[tuple[str, ...], dict[str, Fraction]] = defaultdict(dict)
    for u, stats in per_unit.items():
        for s in stats:
            by_sig[s.signature][u] = s.mean
    deltas = []
    for sig, means in by_sig.items():
        if len(means) < 2:
            continue
        gap = max(abs(a - b) for a, b in itertools.combinations(means.values(), 2))
        deltas.append(UnitDelta(sig, dict(means), gap))
    deltas.sort(key=lambda d: (-d.delta, d.signature))
    return UnitComparison(per_unit, deltas)


def group_by_label(records: Iterable[WorkflowRecord], field_name: str) -> dict[str, list[WorkflowRecord]]:
    groups: dict[str, list[WorkflowRecord]] = defaultdict(list)
    for r in records:
        label = r.label(field_name)
        if label is not None:
            groups[label].append(r)
    return dict(sorted(groups.items()))
