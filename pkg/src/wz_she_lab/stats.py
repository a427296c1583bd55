"""Monte Carlo estimate containers and standard-error helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EstimateWithCI:
    """A Monte Carlo scalar with its standard error and sample count."""

    value: float
    se: float
    n: int

    def agrees_with(self, other: "EstimateWithCI", k: float = 3.0) -> bool:
        """Cross-method agreement within k combined standard errors."""
        return abs(self.value - other.value) <= k * np.hypot(self.se, other.se)


def mean_estimate(samples) -> EstimateWithCI:
    """Plain i.i.d. mean with SE from the sample standard deviation."""
    x = np.asarray(samples, dtype=float)
    return EstimateWithCI(
        value=float(x.mean()), se=float(x.std(ddof=1) / np.sqrt(len(x))), n=len(x)
    )


def batch_means_estimate(samples, nbatches: int = 32) -> EstimateWithCI:
    """Mean with SE by batch means, for samples with short-range dependence."""
    x = np.asarray(samples, dtype=float)
    n = (len(x) // nbatches) * nbatches
    if n < nbatches:
        raise ValueError("too few samples for the requested batch count")
    means = x[:n].reshape(nbatches, -1).mean(axis=1)
    se = means.std(ddof=1) / np.sqrt(nbatches)
    return EstimateWithCI(value=float(x[:n].mean()), se=float(se), n=n)
