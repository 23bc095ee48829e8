"""Single-axis parameter sweeps and location of the cooling resonances."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO

import numpy as np
from scipy.optimize import minimize_scalar

from .analytic import CoolingLaw, Status, cooling_law_closed, resonance_catalogue
from .csvfmt import fmt
from .errors import CavcoolError, ParameterError
from .params import SystemParams
from .rateeq import eliminate

AXES = ("delta", "omega", "nu", "kappa")
LAWS = {"closed": cooling_law_closed, "eliminated": eliminate}
# resonance names accepted for locking delta while another axis is swept
TRACKS = ("delta0", "delta-", "delta+")
ERROR = "error"


def parse_grid(text: str) -> np.ndarray:
    """Parse ``start:stop:step`` into an inclusive, strictly increasing grid.

    Values are rounded to 12 decimals so a grid symmetric about zero is
    exactly symmetric in floating point.
    """
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ParameterError(f"grid must look like start:stop:step, got {text!r}") from exc
    if step <= 0 or stop <= start:
        raise ParameterError(f"grid needs stop > start and step > 0, got {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9))
    grid = np.round(start + step * np.arange(n + 1), 12)
    if len(grid) < 2:
        raise ParameterError(f"grid {text!r} has fewer than two points")
    return grid


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: Sequence[float]
    base: SystemParams
    law: str = "closed"
    track: str | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ParameterError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.law not in LAWS:
            raise ParameterError(f"law must be one of {tuple(LAWS)}, got {self.law!r}")
        if self.track is not None:
            if self.track not in TRACKS:
                raise ParameterError(f"track must be one of {TRACKS}, got {self.track!r}")
            if self.axis == "delta":
                raise ParameterError("cannot lock delta to a resonance while sweeping delta")
        grid = tuple(float(v) for v in self.grid)
        if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ParameterError("grid must be strictly increasing with at least two points")
        object.__setattr__(self, "grid", grid)

    def params_at(self, value: float) -> SystemParams:
        p = self.base.with_(**{self.axis: value})
        if self.track is not None:
            cat = resonance_catalogue(p.nu, p.omega)
            p = p.with_(delta={"delta0": cat.delta0, "delta-": cat.delta_minus, "delta+": cat.delta_plus}[self.track])
        return p


@dataclass(frozen=True)
class SweepRow:
    value: float
    m_ss: float
    gamma_c: float
    status: str


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow]
    minima: list[tuple[float, float]] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    @property
    def m_ss(self) -> np.ndarray:
        return np.array([r.m_ss for r in self.rows])

    @property
    def gamma_c(self) -> np.ndarray:
        return np.array([r.gamma_c for r in self.rows])

    def write_csv(self, out: TextIO, comments: Sequence[str] = ()):
        for line in comments:
            out.write(f"# {line}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["axis", "value", "m_ss", "gamma_c", "status"])
        for r in self.rows:
            writer.writerow([self.spec.axis, fmt(r.value), fmt(r.m_ss), fmt(r.gamma_c), r.status])
        for loc, val in self.minima:
            out.write(f"# minimum: {fmt(loc)},{fmt(val)}\n")


def _evaluate(spec: SweepSpec, value: float) -> SweepRow:
    try:
        law: CoolingLaw = LAWS[spec.law](spec.params_at(value))
    except CavcoolError:
        return SweepRow(value, math.nan, math.nan, ERROR)
    return SweepRow(value, law.m_ss, law.gamma_c, str(law.status))


def _evaluate_chunk(args: tuple[SweepSpec, Sequence[float]]) -> list[SweepRow]:
    spec, values = args
    return [_evaluate(spec, v) for v in values]


def sweep(spec: SweepSpec, workers: int = 1, refine: bool = True) -> SweepResult:
    """Evaluate the chosen cooling law at every grid point.

    Heating and failing points are kept as rows with NaN ``m_ss``.  With
    ``workers > 1`` the grid is split into contiguous chunks evaluated in
    separate processes; rows come back in grid order either way.
    """
    if workers > 1:
        chunks = [c.tolist() for c in np.array_split(np.array(spec.grid), workers) if len(c)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [row for part in pool.map(_evaluate_chunk, [(spec, c) for c in chunks]) for row in part]
    else:
        rows = [_evaluate(spec, v) for v in spec.grid]
    result = SweepResult(spec, rows)
    if refine and len(rows) >= 3:
        def objective(x: float) -> float:
            m = _evaluate(spec, x).m_ss
            return math.inf if math.isnan(m) else m

        result.minima = find_minima([(r.value, r.m_ss) for r in rows], objective)
    return result


def _quadratic_through(x0, x1, x2, y0, y1, y2) -> Callable[[float], float]:
    def q(x: float) -> float:
        return (
            y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
        )

    return q


def find_minima(
    rows: Sequence[tuple[float, float]],
    objective: Callable[[float], float] | None = None,
    rtol: float = 1e-4,
) -> list[tuple[float, float]]:
    """Locate interior local minima of sampled data and refine them.

    A minimum is a grid point (or the leftmost point of an exact plateau)
    lower than both neighbours outside it.  Each is refined by golden-section
    search inside its bracket, on ``objective`` when given and otherwise on
    the parabola through the bracket points.  NaN samples never qualify.
    """
    if len(rows) < 3:
        raise ParameterError("find_minima needs at least three rows")
    xs = [float(x) for x, _ in rows]
    ys = [float(y) for _, y in rows]
    found = []
    i = 1
    while i < len(ys) - 1:
        j = i
        while j + 1 < len(ys) - 1 and ys[j + 1] == ys[i]:
            j += 1
        left, right = ys[i - 1], ys[j + 1]
        if ys[i] < left and ys[i] < right:
            found.append((i, j))
        i = j + 1

    minima = []
    for i, j in found:
        a, c = xs[i - 1], xs[j + 1]
        if objective is None and j > i:
            minima.append((xs[i], ys[i]))
            continue
        if objective is None:
            f = _quadratic_through(xs[i - 1], xs[i], xs[j + 1], ys[i - 1], ys[i], ys[j + 1])
        else:
            f = objective
        loc, val = _golden(f, a, xs[i], c, ys[i], rtol)
        minima.append((loc, val))
    return minima


def _golden(f, a: float, b: float, c: float, fb: float, rtol: float) -> tuple[float, float]:
    """Golden-section refinement inside the bracket (a, b, c) with f(b) below both ends."""
    res = minimize_scalar(f, bracket=(a, b, c), method="golden", options={"xtol": rtol})
    loc = float(res.x)
    if not a <= loc <= c or not res.fun <= fb:
        return b, fb
    return loc, float(res.fun)


@dataclass(frozen=True)
class ResonanceRow:
    name: str
    delta: float
    law: CoolingLaw


def compare_resonances(params: SystemParams, law: str = "closed") -> list[ResonanceRow]:
    """Cooling law at the three cooling resonances delta0, delta-, delta+."""
    if params.omega <= 0:
        raise ParameterError("compare_resonances needs omega > 0")
    cat = resonance_catalogue(params.nu, params.omega)
    fn = LAWS[law]
    return [
        ResonanceRow(name, delta, fn(params.with_(delta=delta)))
        for name, delta in zip(TRACKS, cat.cooling)
    ]


def best_resonance(rows: Sequence[ResonanceRow]) -> ResonanceRow | None:
    cooling = [r for r in rows if r.law.status is Status.COOLING]
    return min(cooling, key=lambda r: r.law.m_ss) if cooling else None
