"""Randomized zero testing for symbolic residuals.

An expression counts as numerically zero when every sample stays below a
scale-relative threshold eps*(1 + scale), where scale is the largest
intermediate magnitude met while evaluating that sample.  This keeps the
verdict meaningful for residuals whose terms cancel at magnitudes far above
the tolerance.
"""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple

from .expr import (EvalDomainError, Expr, evaluate, evaluate_with_scale,
                   free_variables)


@dataclass(frozen=True)
class SamplingSpec:
    """Configuration for is_zero: sample count, per-variable ranges with a
    default, tolerance, RNG seed, and expressions that must stay away from
    zero at accepted sample points (excluded singular sets)."""

    n_samples: int = 100
    ranges: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    default_range: Tuple[float, float] = (0.5, 2.0)
    tolerance: float = 1e-8
    seed: int = 42
    exclude: Tuple[Expr, ...] = ()
    exclusion_tolerance: float = 1e-6
    max_domain_error_fraction: float = 0.2

    def replace(self, **kw) -> "SamplingSpec":
        return dataclasses.replace(self, **kw)

    def range_for(self, name: str) -> Tuple[float, float]:
        return self.ranges.get(name, self.default_range)


DEFAULT_SPEC = SamplingSpec()


@dataclass(frozen=True)
class ZeroVerdict:
    kind: str  # "zero" | "nonzero" | "inconclusive"
    witness: Optional[dict]
    witness_value: Optional[float]
    max_abs: float
    n_evaluated: int
    n_domain_errors: int

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def __bool__(self) -> bool:
        return self.is_zero


def is_zero(e: Expr, spec: SamplingSpec = DEFAULT_SPEC) -> ZeroVerdict:
    """Sample ``e`` at random points and classify it.

    Returns nonzero with a witness point as soon as any sample exceeds the
    scale-relative threshold, inconclusive when more than the allowed
    fraction of samples hits domain errors, zero otherwise.
    """
    names = sorted(free_variables(e))
    for x in spec.exclude:
        names = sorted(set(names) | free_variables(x))
    rng = random.Random(spec.seed)

    max_abs = 0.0
    worst_excess = -1.0
    witness = None
    witness_value = None
    n_evaluated = 0
    n_errors = 0

    for _ in range(spec.n_samples):
        point = _draw_point(rng, names, spec)
        if point is None:
            n_errors += 1
            continue
        try:
            v, scale = evaluate_with_scale(e, point)
        except EvalDomainError:
            n_errors += 1
            continue
        n_evaluated += 1
        av = abs(v)
        if av > max_abs:
            max_abs = av
        threshold = spec.tolerance * (1.0 + scale)
        if av > threshold and av - threshold > worst_excess:
            worst_excess = av - threshold
            witness = point
            witness_value = v

    if witness is not None:
        return ZeroVerdict("nonzero", witness, witness_value, max_abs,
                           n_evaluated, n_errors)
    if n_errors > spec.max_domain_error_fraction * spec.n_samples:
        return ZeroVerdict("inconclusive", None, None, max_abs,
                           n_evaluated, n_errors)
    return ZeroVerdict("zero", None, None, max_abs, n_evaluated, n_errors)


def _draw_point(rng, names, spec: SamplingSpec):
    # Rejection sampling against the excluded sets, bounded retries.
    for _ in range(50):
        point = {}
        for n in names:
            lo, hi = spec.range_for(n)
            point[n] = rng.uniform(lo, hi)
        if _excluded(point, spec):
            continue
        return point
    return None


def _excluded(point, spec: SamplingSpec) -> bool:
    for x in spec.exclude:
        try:
            if abs(evaluate(x, point)) <= spec.exclusion_tolerance:
                return True
        except EvalDomainError:
            return True
    return False


def sample_values(e: Expr, spec: SamplingSpec = DEFAULT_SPEC):
    """Evaluate ``e`` at ``spec``'s sample points, skipping domain errors.
    Used for sign probes; returns the list of sampled values."""
    names = sorted(free_variables(e))
    rng = random.Random(spec.seed)
    values = []
    for _ in range(spec.n_samples):
        point = {n: rng.uniform(*spec.range_for(n)) for n in names}
        try:
            values.append(evaluate(e, point))
        except EvalDomainError:
            continue
    return values
