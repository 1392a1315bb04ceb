"""Per-trial estimate summaries shared by the sampling experiments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QUANTILES = (0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0)


@dataclass(frozen=True)
class TrialStatistics:
    """Estimates from independent trials, compared to a reference value."""

    estimates: np.ndarray
    reference: float | None = None

    @property
    def trials(self) -> int:
        return int(self.estimates.size)

    @property
    def deviations(self) -> np.ndarray:
        if self.reference is None:
            raise ValueError("no reference value to deviate from")
        return np.abs(self.estimates - self.reference)

    def quantiles(self, of: str = "deviations") -> dict[float, float]:
        data = self.deviations if of == "deviations" else self.estimates
        # sort first so the summary does not depend on trial completion order
        data = np.sort(data)
        return {q: float(np.quantile(data, q)) for q in QUANTILES}

    @property
    def median_deviation(self) -> float:
        return float(np.median(self.deviations))

    def failure_rate(self, threshold: float) -> float:
        """Fraction of trials with deviation strictly above ``threshold``."""
        return float(np.mean(self.deviations > threshold))
