"""Run-wide configuration shared by the CLI and the verification suite."""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import DomainError


@dataclass(frozen=True)
class GlobalConfig:
    """Knobs that apply across a whole run.

    hbar enters only through momentum scaling and the right-hand sides of the
    verified bounds.  infinity_cutoff is the fallback width beyond which a
    search reports "infinite" when no grid is available to derive one.
    rng_seed seeds every stochastic helper so runs are reproducible.
    """

    hbar: float = 1.0
    infinity_cutoff: float = 1e6
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (self.hbar > 0.0):
            raise DomainError("hbar must be positive")
        if not (self.infinity_cutoff > 0.0):
            raise DomainError("infinity_cutoff must be positive")
