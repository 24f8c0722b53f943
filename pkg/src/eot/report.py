from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class SweepRecord:
    sweep: int
    dual: float
    residuals: list[float]


@dataclass
class SolveReport:
    """Outcome of one solve: objective values, marginal residuals and the per-sweep trace."""

    primal: float
    dual: float
    marginal_residuals: list[float]
    iterations: int
    converged: bool
    trace: list[SweepRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.primal - self.dual

    @property
    def max_residual(self) -> float:
        return max(self.marginal_residuals)

    def duals(self) -> list[float]:
        return [rec.dual for rec in self.trace]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["gap"] = self.gap
        return out
