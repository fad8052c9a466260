"""Segmented fitting of step curves by sums of error-function terms.

The price axis is cut into bands ``[p_i, p_{i+1}]``.  Clipping the curve to a
band and subtracting ``p_i`` gives a monotone function that rises (or, for
demand, falls) by ``p_{i+1} - p_i``; these band functions add up to the curve
minus its minimum price.  Each band function is fitted by a single erf term,
so the sum of the terms plus the minimum price approximates the whole curve.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import FREE, PLATEAU, RISE, UNIFORM, FitConfig
from .erf_model import TWO_OVER_SQRT_PI, ErfSumModel, ErfTerm, erf, evaluate
from .errors import (
    EmptySegmentError,
    ErfCurvesError,
    InvalidArgumentError,
    NoIntersectionError,
    NoIntersectionInDomainError,
    SegmentFitError,
)
from .lm_solver import LeastSquaresProblem, solve
from .market_curves import DEMAND, SUPPLY, Equilibrium, StepCurve

C_MIN = 1e-8
# shortcut steepness: erf(4) = 1 - 1.5e-8, so the jump is complete one plateau away
SHORTCUT_SHARPNESS = 4.0
# solver fits keep |c (x - b)| >= EDGE_Z at both window edges, so the term
# covers at least erf(EDGE_Z) = 96% of its rise inside the window
EDGE_Z = 1.45221978156225
EDGE_NORM = 8.0


@dataclass(frozen=True)
class Segmentation:
    method: str
    levels: tuple[float, ...]

    @property
    def n_segments(self) -> int:
        return len(self.levels) - 1

    @property
    def bands(self) -> list[tuple[float, float]]:
        return list(zip(self.levels[:-1], self.levels[1:]))


@dataclass
class SegmentFit:
    term: ErfTerm
    level_lo: float
    level_hi: float
    residual_norm: float
    n_points: int
    n_jumps: int
    shortcut: bool
    iterations: int = 0
    reason: str = ""
    q_lo: float = 0.0  # quantity window the term was fitted on
    q_hi: float = 0.0


@dataclass
class FittedCurve:
    model: ErfSumModel
    segmentation: Segmentation
    segments: list[SegmentFit] = field(default_factory=list)
    fit_seconds: float = 0.0

    @property
    def residual_norms(self) -> list[float]:
        return [s.residual_norm for s in self.segments]

    def to_dict(self) -> dict:
        """Deterministic record (wall time excluded)."""
        return {
            "model": self.model.to_dict(),
            "method": self.segmentation.method,
            "levels": list(self.segmentation.levels),
            "residual_norms": self.residual_norms,
        }


def _check_m(M):
    if int(M) != M or M < 1:
        raise InvalidArgumentError(f"number of segments must be a positive integer, got {M!r}")


def segment_uniform(curve: StepCurve, M: int) -> Segmentation:
    """Cut ``[min price, max price]`` into ``M`` equal bands."""
    _check_m(M)
    lo, hi = curve.min_price, curve.max_price
    if lo == hi:
        return Segmentation(UNIFORM, (lo,))
    levels = [lo + i * (hi - lo) / M for i in range(M)] + [hi]
    return Segmentation(UNIFORM, tuple(sorted(set(levels))))


def segment_plateau(curve: StepCurve, M: int) -> Segmentation:
    """Levels at the prices of the ``M - 1`` widest interior plateaus.

    Plateaus at the minimum and maximum price are the endpoints and are not
    eligible as interior levels; ties in width go to the lower price.  With too
    few plateaus every interior one is used and fewer bands result.
    """
    _check_m(M)
    lo, hi = curve.min_price, curve.max_price
    if lo == hi:
        return Segmentation(PLATEAU, (lo,))
    widths = np.diff(curve.quantities, prepend=0.0)
    interior = [(float(w), float(p)) for w, p in zip(widths, curve.prices) if lo < p < hi]
    interior.sort(key=lambda wp: (-wp[0], wp[1]))
    picked = [p for _, p in interior[: M - 1]]
    return Segmentation(PLATEAU, tuple(sorted({lo, hi, *picked})))


def segment(curve: StepCurve, M: int, method: str) -> Segmentation:
    if method == UNIFORM:
        return segment_uniform(curve, M)
    if method == PLATEAU:
        return segment_plateau(curve, M)
    raise InvalidArgumentError(f"unknown segmentation method {method!r}")


@dataclass
class _Band:
    x: np.ndarray  # sample quantities
    y: np.ndarray  # band function at the samples, shifted so its minimum is 0
    base: float  # price added back: level_lo + min of the clipped curve
    rise: float
    n_jumps: int
    jump_at: float  # quantity of the first jump in the window
    half_rise_at: float
    extent: float  # quantity span of the jumps (or of the window for one jump)
    min_width: float  # narrower of the two plateaus around a single jump


def _band(curve: StepCurve, lo: float, hi: float) -> _Band:
    q = curve.quantities
    starts = np.concatenate(([0.0], q[:-1]))
    g = np.clip(curve.prices, lo, hi) - lo
    first, last = g[0], g[-1]
    k_lo = int(np.flatnonzero(g == first)[-1])
    k_hi = int(np.flatnonzero(g == last)[0])
    if k_hi < k_lo:
        k_hi = k_lo
    window = slice(k_lo, k_hi + 1)
    g_min = min(first, last)
    gw = g[window] - g_min
    x = np.column_stack((starts[window], q[window])).reshape(-1)
    y = np.repeat(gw, 2)
    rise = abs(last - first)
    n_jumps = k_hi - k_lo
    if n_jumps == 0:
        return _Band(x, y, lo + g_min, 0.0, 0, float(q[k_lo]), float(q[k_lo]),
                     float(q[k_lo] - starts[k_lo]), float(q[k_lo] - starts[k_lo]))
    # first step whose level has moved at least half-way across the band
    moved = np.abs(g[window] - first)
    k_half = k_lo + int(np.flatnonzero(moved >= rise / 2)[0])
    if n_jumps >= 2:
        extent = float(q[k_hi - 1] - q[k_lo])
    else:
        extent = float(q[k_hi] - starts[k_lo])
    min_width = float(min(q[k_lo] - starts[k_lo], q[k_hi] - starts[k_hi]))
    return _Band(x, y, lo + g_min, float(rise), n_jumps, float(q[k_lo]),
                 float(starts[k_half]), extent, min_width)


def _fit_band_lm(band: _Band, sign: float, amplitude: str, solver_options: dict):
    # b = x_lo + W * sigmoid(u) stays inside the window and c = c_edge(b) + w / L
    # with w >= 0, where c_edge(b) >= EDGE_Z / (distance to the nearer edge),
    # so the fit cannot park a shallow term against a window edge
    L = band.extent if band.extent > 0 else 1.0
    x, y = band.x, band.y
    x_lo, x_hi = float(x[0]), float(x[-1])
    W = x_hi - x_lo
    a_fixed = band.rise / 2
    k = EDGE_NORM

    def c_edge(b):
        # smooth stand-in for EDGE_Z / min(d1, d2): the k-norm of (1/d1, 1/d2)
        d1, d2 = b - x_lo, x_hi - b
        total = d1 ** -k + d2 ** -k
        value = EDGE_Z * total ** (1.0 / k)
        slope = EDGE_Z * total ** (1.0 / k - 1.0) * (d2 ** (-k - 1) - d1 ** (-k - 1))
        return value, slope

    def shape(u, w):
        s = min(max(1.0 / (1.0 + np.exp(-u)), 1e-9), 1.0 - 1e-9)
        b = x_lo + W * s
        value, slope = c_edge(b)
        db_du = W * s * (1.0 - s)
        return b, value + w / L, db_du, slope * db_du

    def unpack(p):
        if amplitude == FREE:
            return (p[0] * band.rise, *shape(p[1], p[2]))
        return (a_fixed, *shape(p[0], p[1]))

    def residual(p):
        a, b, c = unpack(p)[:3]
        return a * (erf(sign * c * (x - b)) + 1.0) - y

    def jacobian(p):
        a, b, c, db_du, dc_du = unpack(p)
        z = sign * c * (x - b)
        bell = TWO_OVER_SQRT_PI * np.exp(-z * z)
        d_b = -a * sign * c * bell
        d_c = a * sign * (x - b) * bell
        d_u = d_b * db_du + d_c * dc_du
        d_w = d_c / L
        if amplitude == FREE:
            return np.column_stack(((erf(z) + 1.0) * band.rise, d_u, d_w))
        return np.column_stack((d_u, d_w))

    b0 = band.half_rise_at
    s0 = (b0 - x_lo) / W
    u0 = float(np.log(s0 / (1.0 - s0)))
    w0 = max(SHORTCUT_SHARPNESS - c_edge(b0)[0] * L, 0.0)
    if amplitude == FREE:
        p0 = np.array([0.5, u0, w0])
        lower = np.array([0.0, -np.inf, 0.0])
    else:
        p0 = np.array([u0, w0])
        lower = np.array([-np.inf, 0.0])
    result = solve(LeastSquaresProblem(residual, p0, jacobian, lower, **solver_options))
    a, b, c = unpack(result.p)[:3]
    return ErfTerm(float(a), float(b), float(max(c, C_MIN))), result


def fit_band(curve: StepCurve, level_lo: float, level_hi: float, *, shortcut: bool = True,
             amplitude: str = RISE, solver_options: dict | None = None) -> SegmentFit:
    """Fit one erf term to the part of ``curve`` between two price levels.

    Samples are the ends of every plateau in the band's window: the last
    plateau at or below the band, the plateaus inside it and the first one at
    or above it.  A band crossed by a single jump is fitted without the solver
    (center at the jump, shape ``4 / w`` with ``w`` the narrower neighboring
    plateau).
    """
    if not level_lo < level_hi:
        raise InvalidArgumentError(f"empty price band [{level_lo}, {level_hi}]")
    if curve.max_price < level_lo or curve.min_price > level_hi:
        raise EmptySegmentError(
            f"{curve.side} curve has no values in [{level_lo}, {level_hi}]"
        )
    sign = 1.0 if curve.side == SUPPLY else -1.0
    band = _band(curve, level_lo, level_hi)
    n = band.x.size
    window = (float(band.x[0]), float(band.x[-1]))

    def residual_norm(term):
        model = ErfSumModel(curve.side, (term,), 0.0)
        return float(np.linalg.norm(evaluate(model, band.x) - band.y))

    if band.rise == 0:
        term = ErfTerm(0.0, band.jump_at, SHORTCUT_SHARPNESS / max(band.extent, 1.0))
        return SegmentFit(term, level_lo, level_hi, residual_norm(term), n, 0, True,
                          q_lo=window[0], q_hi=window[1])
    if shortcut and band.n_jumps == 1:
        c = SHORTCUT_SHARPNESS / band.min_width
        term = ErfTerm(band.rise / 2, band.jump_at, c)
        return SegmentFit(term, level_lo, level_hi, residual_norm(term), n, 1, True,
                          q_lo=window[0], q_hi=window[1])
    term, result = _fit_band_lm(band, sign, amplitude, solver_options or {})
    return SegmentFit(term, level_lo, level_hi, float(np.sqrt(result.cost)), n,
                      band.n_jumps, False, result.iterations, result.reason, *window)


def fit_segment(curve: StepCurve, level_lo: float, level_hi: float, **kwargs) -> ErfTerm:
    """The erf term of :func:`fit_band`."""
    return fit_band(curve, level_lo, level_hi, **kwargs).term


def fit_curve(curve: StepCurve, M: int, method: str = PLATEAU,
              config: FitConfig | None = None, provenance: dict | None = None) -> FittedCurve:
    """Segment ``curve`` into ``M`` price bands and fit one term per band.

    The curve should already be truncated to the fitting cap.  Terms are
    ordered by ascending price band; the model offset is the minimum price.
    """
    config = config or FitConfig()
    started = time.perf_counter()
    seg = segment(curve, M, method)
    fits = []
    for i, (lo, hi) in enumerate(seg.bands):
        try:
            fits.append(fit_band(curve, lo, hi, shortcut=config.shortcut,
                                 amplitude=config.amplitude,
                                 solver_options=config.solver_options()))
        except ErfCurvesError as exc:
            raise SegmentFitError(i, exc) from exc
    prov = {"M": int(M), "method": method}
    prov.update(provenance or {})
    model = ErfSumModel(curve.side, tuple(f.term for f in fits), curve.min_price, prov)
    return FittedCurve(model, seg, fits, time.perf_counter() - started)


def step_vertices(curve: StepCurve) -> tuple[np.ndarray, np.ndarray]:
    """Both ends of every plateau of the staircase."""
    starts = np.concatenate(([0.0], curve.quantities[:-1]))
    x = np.column_stack((starts, curve.quantities)).reshape(-1)
    return x, np.repeat(curve.prices, 2)


def residual_rms(curve: StepCurve, model: ErfSumModel) -> float:
    """RMS of model minus curve over the plateau ends of the staircase."""
    x, y = step_vertices(curve)
    return float(np.sqrt(np.mean((evaluate(model, x) - y) ** 2)))


def intersect_fitted(supply: ErfSumModel, demand: ErfSumModel, q_max: float,
                     tol: float = 1e-9, ends: str | None = None) -> Equilibrium:
    """Crossing of a fitted supply and demand model by bisection on ``[0, q_max]``.

    Bisection stops when ``|demand - supply| <= tol`` or when the bracket can
    no longer be split in floating point.

    If demand is still above supply at ``q_max`` this raises
    :class:`NoIntersectionInDomainError`, unless ``ends`` names the curve whose
    offers run out at ``q_max``.  That curve then closes vertically, as in
    exact clearing: the crossing is at ``q_max`` with the other curve's price.
    """
    if supply.side != SUPPLY or demand.side != DEMAND:
        raise InvalidArgumentError("intersect_fitted expects (supply, demand) models")
    if ends not in (None, SUPPLY, DEMAND):
        raise InvalidArgumentError(f"ends must be None, 'supply' or 'demand', got {ends!r}")

    def h(q):
        return evaluate(demand, q) - evaluate(supply, q)

    lo, hi = 0.0, float(q_max)
    h_lo = h(lo)
    if h_lo < 0:
        raise NoIntersectionError(f"fitted demand below fitted supply at zero ({h_lo:.6g})")
    h_hi = h(hi)
    if h_hi > 0 and ends is not None:
        closed_price = evaluate(supply if ends == DEMAND else demand, hi)
        return Equilibrium(price=closed_price, quantity=hi)
    if h_hi > 0:
        raise NoIntersectionInDomainError(
            f"fitted demand still above fitted supply at q_max={q_max} ({h_hi:.6g})"
        )
    while abs(h_lo) > tol and abs(h_hi) > tol:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        h_mid = h(mid)
        if h_mid > 0:
            lo, h_lo = mid, h_mid
        else:
            hi, h_hi = mid, h_mid
    q = lo if abs(h_lo) <= abs(h_hi) else hi
    return Equilibrium(price=evaluate(supply, q), quantity=q)


__all__ = [
    "FittedCurve",
    "SegmentFit",
    "Segmentation",
    "fit_band",
    "fit_curve",
    "fit_segment",
    "intersect_fitted",
    "residual_rms",
    "segment",
    "segment_plateau",
    "segment_uniform",
    "step_vertices",
]
