"""Side-by-side evaluation of the two payment rules on a welfare-maximizing assignment."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from statistics import fmean

import numpy as np

from recondiv.envy import EnvyReport, envy_report, min_max_envy_payments
from recondiv.generate import GeneratorConfig, generate_instance
from recondiv.graphs import CycleCertificate
from recondiv.model import DEFAULT_THRESHOLD, DEFAULT_TOL, Allocation, Instance, Number, check_assignment
from recondiv.proportionality import (
    DisproportionalityReport,
    disproportionality_report,
    min_disprop_payments,
    utilitarian_assignment,
)

__all__ = [
    "MIN_ENVY",
    "MIN_DISPROP",
    "RunReport",
    "RunPair",
    "ExperimentConfig",
    "ExperimentSummary",
    "build_run_report",
    "compare_payment_rules",
    "run_experiment",
]

MIN_ENVY = "min-envy"
MIN_DISPROP = "min-disprop"


def _plain(x):
    return float(x) if isinstance(x, Fraction) else x


@dataclass(frozen=True)
class RunReport:
    """Envy and disproportionality of one allocation, raw and relative to the mean new-apartment value."""

    mechanism: str
    assignment: tuple[int, ...]
    payments: tuple[Number, ...]
    envy: EnvyReport
    disproportionality: DisproportionalityReport
    average_value: Number
    certificate: CycleCertificate | None = None

    @property
    def max_envy(self) -> Number:
        return self.envy.max_envy

    @property
    def max_dp(self) -> Number:
        return self.disproportionality.max_dp

    @property
    def normalized_max_envy(self) -> float:
        return float(self.max_envy) / float(self.average_value) if self.average_value else float("nan")

    @property
    def normalized_max_dp(self) -> float:
        return float(self.max_dp) / float(self.average_value) if self.average_value else float("nan")

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "assignment": list(self.assignment),
            "payments": [_plain(p) for p in self.payments],
            "envy": [_plain(e) for e in self.envy.envy],
            "max_envy": _plain(self.max_envy),
            "envy_witness": list(self.envy.witness) if self.envy.witness else None,
            "dp": [_plain(d) for d in self.disproportionality.dp],
            "max_dp": _plain(self.max_dp),
            "dp_witness": self.disproportionality.witness,
            "dp_sum": _plain(self.disproportionality.dp_sum),
            "average_value": _plain(self.average_value),
            "max_envy_over_V": self.normalized_max_envy,
            "max_dp_over_V": self.normalized_max_dp,
            "cycle": list(self.certificate.nodes) if self.certificate else None,
        }


def build_run_report(instance: Instance, mechanism: str, allocation: Allocation,
                     certificate: CycleCertificate | None = None) -> RunReport:
    dp = disproportionality_report(instance, allocation)
    return RunReport(mechanism, allocation.assignment, allocation.payments,
                     envy_report(instance, allocation), dp, dp.average_value, certificate)


@dataclass(frozen=True)
class RunPair:
    min_envy: RunReport
    min_disprop: RunReport
    seed: int | None = None

    def tolerance(self) -> float:
        if isinstance(self.min_envy.max_envy, Fraction):
            return 0
        scale = max(1.0, abs(float(self.min_envy.average_value)))
        return DEFAULT_TOL * scale * len(self.min_envy.assignment)

    def dominance_holds(self) -> bool:
        """Each payment rule weakly wins its own objective."""
        tol = self.tolerance()
        return (self.min_envy.max_envy <= self.min_disprop.max_envy + tol
                and self.min_disprop.max_dp <= self.min_envy.max_dp + tol)

    def prop_without_ef(self) -> bool:
        """Proportionality reached while envy stays positive."""
        tol = self.tolerance()
        return self.min_disprop.max_dp <= tol and self.min_envy.max_envy > tol


def compare_payment_rules(instance: Instance, assignment=None, seed: int | None = None) -> RunPair:
    """Evaluate min-max-envy and min-disproportionality payments on one assignment."""
    assignment = utilitarian_assignment(instance) if assignment is None else check_assignment(instance, assignment)
    envy = min_max_envy_payments(instance, assignment)
    dp_alloc = Allocation(assignment, min_disprop_payments(instance, assignment))
    return RunPair(
        build_run_report(instance, MIN_ENVY, envy.allocation, envy.cycle),
        build_run_report(instance, MIN_DISPROP, dp_alloc, envy.cycle),
        seed,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    agents: int = 45
    repetitions: int = 10
    seed: int = 0
    model: str = "multiplicative"
    endowment: bool = False
    normalize: float | None = DEFAULT_THRESHOLD
    significance: float | None = None
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)

    def run_seeds(self) -> list[int]:
        children = np.random.SeedSequence(self.seed).spawn(self.repetitions)
        return [int(c.generate_state(1)[0]) for c in children]


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    runs: tuple[RunPair, ...]

    def means(self) -> dict[str, dict[str, float]]:
        """Mean of each column over the repetitions, per payment rule."""
        out = {}
        for name, pick in ((MIN_ENVY, lambda r: r.min_envy), (MIN_DISPROP, lambda r: r.min_disprop)):
            reports = [pick(r) for r in self.runs]
            out[name] = {
                "max_dp": fmean(float(x.max_dp) for x in reports),
                "max_envy": fmean(float(x.max_envy) for x in reports),
                "max_dp_over_V": fmean(x.normalized_max_dp for x in reports),
                "max_envy_over_V": fmean(x.normalized_max_envy for x in reports),
            }
        return out

    def average_value(self) -> float:
        return fmean(float(r.min_envy.average_value) for r in self.runs)

    def dominance_violations(self) -> int:
        return sum(not r.dominance_holds() for r in self.runs)

    def prop_without_ef_count(self) -> int:
        return sum(r.prop_without_ef() for r in self.runs)

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["generator"] = {k: v for k, v in cfg["generator"].items() if k != "characteristics"}
        return {
            "config": cfg,
            "synthetic": True,
            "average_value": self.average_value(),
            "means": self.means(),
            "dominance_violations": self.dominance_violations(),
            "prop_without_ef_runs": self.prop_without_ef_count(),
            "runs": [{"seed": r.seed, MIN_ENVY: r.min_envy.to_dict(), MIN_DISPROP: r.min_disprop.to_dict()}
                     for r in self.runs],
        }


def run_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Generate ``repetitions`` instances and compare both payment rules on each."""
    runs = []
    for seed in config.run_seeds():
        instance = generate_instance(config.agents, seed, config.model, endowment=config.endowment,
                                     normalize=config.normalize, significance=config.significance,
                                     config=config.generator)
        runs.append(compare_payment_rules(instance, seed=seed))
    return ExperimentSummary(config, tuple(runs))
