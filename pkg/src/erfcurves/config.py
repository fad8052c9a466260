"""Run configuration shared by the fitter, the batch runner and the CLI."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import InvalidArgumentError

UNIFORM = "uniform"
PLATEAU = "plateau"
METHODS = (UNIFORM, PLATEAU)

RISE = "rise"
FREE = "free"


@dataclass(frozen=True)
class FitConfig:
    """Fitting configuration.

    ``amplitude="rise"`` pins every term's amplitude to half its band's price
    rise and solves for center and shape only; ``"free"`` solves for all three.
    ``demand_method=None`` reuses ``method`` for the demand curve.
    """

    m_supply: int = 15
    m_demand: int = 5
    method: str = PLATEAU
    demand_method: str | None = None
    price_cap: float = 400.0
    amplitude: str = RISE
    shortcut: bool = True
    gtol: float = 1e-10
    xtol: float = 1e-10
    ftol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if self.m_supply < 1 or self.m_demand < 1:
            raise InvalidArgumentError("number of terms must be at least 1")
        for m in (self.method, self.demand_method):
            if m is not None and m not in METHODS:
                raise InvalidArgumentError(f"unknown segmentation method {m!r}")
        if self.amplitude not in (RISE, FREE):
            raise InvalidArgumentError(f"unknown amplitude mode {self.amplitude!r}")
        if not self.price_cap > 0:
            raise InvalidArgumentError("price cap must be positive")

    def method_for(self, side: str) -> str:
        if side == "demand" and self.demand_method is not None:
            return self.demand_method
        return self.method

    def terms_for(self, side: str) -> int:
        return self.m_supply if side == "supply" else self.m_demand

    def solver_options(self) -> dict:
        return {"gtol": self.gtol, "xtol": self.xtol, "ftol": self.ftol, "max_iter": self.max_iter}

    def with_overrides(self, **kwargs) -> "FitConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, record: dict) -> "FitConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(record) - known
        if unknown:
            raise InvalidArgumentError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**record)

    @classmethod
    def load(cls, path) -> "FitConfig":
        """Read a JSON file: either a bare record or one with "fit" (and "synth") sections."""
        record = json.loads(Path(path).read_text())
        if "fit" in record or "synth" in record:
            record = record.get("fit", {})
        return cls.from_dict(record)
