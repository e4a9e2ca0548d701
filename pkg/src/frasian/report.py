"""Structured results for Monte Carlo runs."""

from dataclasses import dataclass, field

from .rng import RngSeed

__all__ = ["SimulationReport"]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SimulationReport:
    """Outcome of a simulation study.

    Every point estimate must come with a Monte Carlo standard error, or be
    listed in ``exact`` when it is a deterministic quantity (a closed-form
    length, say) for which a standard error would be meaningless.
    """

    estimates: dict
    standard_errors: dict
    replicates: int
    config: dict
    seed: RngSeed | None = None
    exact: tuple = ()
    warnings: tuple = ()

    def __post_init__(self):
        missing = [
            k for k in self.estimates if k not in self.standard_errors and k not in self.exact
        ]
        if missing:
            raise ValueError(
                f"estimates without a standard error must be flagged exact: {missing}"
            )
        stray = [k for k in self.standard_errors if k not in self.estimates]
        if stray:
            raise ValueError(f"standard errors for unknown estimates: {stray}")
        if int(self.replicates) < 0:
            raise ValueError(f"replicates must be non-negative, got {self.replicates}")
        object.__setattr__(self, "replicates", int(self.replicates))
        object.__setattr__(self, "exact", tuple(self.exact))
        object.__setattr__(self, "warnings", tuple(str(w) for w in self.warnings))

    def to_dict(self) -> dict:
        """JSON-ready representation (plain types only, schema-tagged)."""
        return {
            "schema": SCHEMA_VERSION,
            "estimates": {k: float(v) for k, v in sorted(self.estimates.items())},
            "standard_errors": {k: float(v) for k, v in sorted(self.standard_errors.items())},
            "exact": sorted(self.exact),
            "replicates": self.replicates,
            "seed": self.seed.to_dict() if self.seed is not None else None,
            "config": self.config,
            "warnings": list(self.warnings),
        }
