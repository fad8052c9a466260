"""Supply/demand step curves of an hourly auction and their exact equilibrium.

A curve is stored as its breakpoints ``(q_k, p_k)``: cumulative quantity and
the price of the layer ending there.  The curve takes the value ``p_k`` on
``(q_{k-1}, q_k]`` with ``q_0 = 0``; at ``q = 0`` it takes ``p_1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyCurveError,
    InvalidArgumentError,
    InvalidLayerError,
    NoIntersectionError,
    OutOfDomainError,
)

SUPPLY = "supply"
DEMAND = "demand"
SIDES = (SUPPLY, DEMAND)

MARKET_MAX_PRICE = 3000.0


def check_side(side: str) -> str:
    if side not in SIDES:
        raise InvalidArgumentError(f"side must be 'supply' or 'demand', got {side!r}")
    return side


@dataclass(frozen=True, slots=True)
class BidLayer:
    """One aggregated price layer: ``volume`` MW offered/requested at ``price`` EUR."""

    volume: float
    price: float
    side: str


@dataclass(frozen=True, slots=True)
class Equilibrium:
    price: float
    quantity: float
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class StepCurve:
    """Monotone piecewise-constant cumulative curve (quantity -> price).

    Parameters
    ----------
    side : {"supply", "demand"}
    quantities : array-like
        Strictly increasing cumulative quantities (MW).
    prices : array-like
        Prices (EUR) of each step; nondecreasing for supply, nonincreasing for
        demand, with no two consecutive steps sharing a price.
    """

    side: str
    quantities: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        check_side(self.side)
        q = np.array(self.quantities, dtype=float)
        p = np.array(self.prices, dtype=float)
        if q.ndim != 1 or q.shape != p.shape:
            raise InvalidArgumentError("quantities and prices must be 1-D and of equal length")
        if q.size == 0:
            raise EmptyCurveError(f"{self.side} curve has no breakpoints")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise InvalidArgumentError("breakpoints must be finite")
        if q[0] < 0 or np.any(np.diff(q) <= 0):
            raise InvalidArgumentError("cumulative quantities must be nonnegative and strictly increasing")
        dp = np.diff(p)
        if np.any(dp == 0):
            raise InvalidArgumentError("consecutive breakpoints share a price; merge them first")
        if self.side == SUPPLY and np.any(dp < 0):
            raise InvalidArgumentError("supply prices must be nondecreasing")
        if self.side == DEMAND and np.any(dp > 0):
            raise InvalidArgumentError("demand prices must be nonincreasing")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "quantities", q)
        object.__setattr__(self, "prices", p)

    @classmethod
    def from_points(cls, side: str, points: Iterable[tuple[float, float]]) -> "StepCurve":
        pts = list(points)
        if not pts:
            raise EmptyCurveError(f"{side} curve has no breakpoints")
        q, p = zip(*pts)
        return cls(side, q, p)

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(q), float(p)) for q, p in zip(self.quantities, self.prices)]

    @property
    def total_quantity(self) -> float:
        return float(self.quantities[-1])

    @property
    def min_price(self) -> float:
        return float(self.prices.min())

    @property
    def max_price(self) -> float:
        return float(self.prices.max())

    def __len__(self):
        return self.quantities.size

    def __eq__(self, other):
        if not isinstance(other, StepCurve):
            return NotImplemented
        return (
            self.side == other.side
            and np.array_equal(self.quantities, other.quantities)
            and np.array_equal(self.prices, other.prices)
        )

    def __hash__(self):
        return hash((self.side, self.quantities.tobytes(), self.prices.tobytes()))

    def __repr__(self):
        head = ", ".join(f"({q:g}, {p:g})" for q, p in self.points[:4])
        tail = ", ..." if len(self) > 4 else ""
        return f"StepCurve({self.side}, [{head}{tail}], n={len(self)})"


def _cumulate(layers: Sequence[BidLayer], side: str, descending: bool) -> StepCurve:
    if not layers:
        raise EmptyCurveError(f"no {side} layers")
    # Sum in decimal so that e.g. 13392.7 + 25 + 113.8 lands exactly on 13531.5.
    merged: dict[float, Decimal] = {}
    for i, layer in enumerate(layers):
        if layer.side != side:
            raise InvalidLayerError(f"layer {i} has side {layer.side!r}, expected {side!r}")
        if not (layer.volume >= 0) or not np.isfinite(layer.volume):
            raise InvalidLayerError(f"layer {i} has invalid volume {layer.volume!r}")
        if not np.isfinite(layer.price):
            raise InvalidLayerError(f"layer {i} has invalid price {layer.price!r}")
        if layer.volume == 0:
            continue
        merged[layer.price] = merged.get(layer.price, Decimal(0)) + Decimal(repr(float(layer.volume)))
    if not merged:
        raise EmptyCurveError(f"all {side} layers have zero volume")
    prices = sorted(merged, reverse=descending)
    total = Decimal(0)
    quantities = []
    for price in prices:
        total += merged[price]
        quantities.append(float(total))
    return StepCurve(side, quantities, prices)


def build_supply_curve(layers: Sequence[BidLayer]) -> StepCurve:
    """Sort offers by ascending price, merge equal prices and cumulate volumes.

    Zero-volume layers contribute nothing and are dropped.
    """
    return _cumulate(layers, SUPPLY, descending=False)


def build_demand_curve(layers: Sequence[BidLayer], max_price: float = MARKET_MAX_PRICE) -> StepCurve:
    """Build the demand curve, treating zero-price bids as bids at ``max_price``.

    Only bids at exactly 0 EUR are replaced; bids are then sorted by descending
    price, merged and cumulated.
    """
    replaced = [
        BidLayer(layer.volume, max_price, layer.side) if layer.price == 0 else layer
        for layer in layers
    ]
    return _cumulate(replaced, DEMAND, descending=True)


def truncate_curve(curve: StepCurve, price_cap: float) -> StepCurve:
    """Restrict a curve to prices at or below ``price_cap``.

    Supply steps above the cap are dropped.  Demand prices above the cap are
    clamped to it and the resulting run of equal-price steps is merged.
    """
    if not price_cap > 0:
        raise InvalidArgumentError(f"price cap must be positive, got {price_cap}")
    q, p = curve.quantities, curve.prices
    if curve.side == SUPPLY:
        keep = p <= price_cap
        if not keep.any():
            raise EmptyCurveError(f"no supply steps at or below {price_cap}")
        return StepCurve(SUPPLY, q[keep], p[keep])
    clamped = np.minimum(p, price_cap)
    # keep the last breakpoint of each equal-price run
    last_of_run = np.append(clamped[1:] != clamped[:-1], True)
    return StepCurve(DEMAND, q[last_of_run], clamped[last_of_run])


def eval_step(curve: StepCurve, quantity):
    """Price of the first breakpoint whose cumulative quantity is >= ``quantity``.

    Accepts a scalar or an array; raises :class:`OutOfDomainError` outside
    ``[0, total_quantity]``.
    """
    x = np.asarray(quantity, dtype=float)
    if np.any(x < 0) or np.any(x > curve.quantities[-1]) or np.any(np.isnan(x)):
        raise OutOfDomainError(
            f"quantity outside [0, {curve.total_quantity}] for {curve.side} curve"
        )
    idx = np.searchsorted(curve.quantities, x, side="left")
    out = curve.prices[idx]
    return float(out) if out.ndim == 0 else out


def clear_market(supply: StepCurve, demand: StepCurve) -> Equilibrium:
    """Intersect a supply and a demand step curve.

    The clearing quantity is the largest quantity at which the demand price is
    still at least the supply price.  The clearing price is the lowest price on
    both staircases at that quantity: the supply price there, unless supply
    jumps past the demand level, in which case the demand price is marginal.
    Past its last breakpoint supply is taken as +inf and demand as -inf.

    ``degenerate`` is set when the staircases overlap on a segment (equal
    prices over a quantity interval, or coincident vertical jumps).
    """
    if supply.side != SUPPLY or demand.side != DEMAND:
        raise InvalidArgumentError("clear_market expects (supply, demand) curves")
    qs, ps = supply.quantities, supply.prices
    qd, pd = demand.quantities, demand.prices
    if pd[0] < ps[0]:
        raise NoIntersectionError(
            f"demand price {pd[0]} is below supply price {ps[0]} at zero quantity"
        )
    ns, nd = qs.size, qd.size
    i = j = 0
    while True:
        s_here, d_here = ps[i], pd[j]
        end = min(qs[i], qd[j])
        if qs[i] == end:
            i += 1
        if qd[j] == end:
            j += 1
        if i == ns or j == nd:
            break
        if pd[j] < ps[i]:
            break
    s_next = ps[i] if i < ns else np.inf
    d_next = pd[j] if j < nd else -np.inf
    price = max(s_here, d_next)
    upper = min(s_next, d_here)
    degenerate = bool(s_here == d_here or upper > price)
    return Equilibrium(price=float(price), quantity=float(end), degenerate=degenerate)
