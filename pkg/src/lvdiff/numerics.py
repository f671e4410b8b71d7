"""Floating-point integration of planar systems and numeric independence probes."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import qr

from .algebra.mpoly import MPoly
from .diffstruct import LogLinearExpr, PlanarSystem

HORIZON_REACHED = "HorizonReached"
BLOW_UP = "BlowUpGuard"
STEP_UNDERFLOW = "StepUnderflow"

BLOW_UP_BOUND = 1e6
NO_RELATION_THRESHOLD = 1e-6
RELATION_THRESHOLD = 1e-8

# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class IntegrationError(RuntimeError):
    pass


@dataclass
class Trajectory:
    params: dict[str, float]
    ic: tuple[float, float]
    t: np.ndarray
    states: np.ndarray          # shape (n, 2)
    termination: str
    rtol: float
    atol: float
    vars: tuple[str, str] = ("X", "Y")
    steps: int = 0

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def final_time(self) -> float:
        return float(self.t[-1])

    def values_at(self, i: int) -> dict[str, float]:
        return {self.vars[0]: float(self.states[i, 0]), self.vars[1]: float(self.states[i, 1])}

    def resample(self, grid: np.ndarray) -> np.ndarray:
        """States on ``grid`` (inside [t0, t_end]) via cubic splines through the samples."""
        if grid[0] < self.t[0] - 1e-15 or grid[-1] > self.t[-1] + 1e-15:
            raise ValueError("resampling grid leaves the trajectory's time range")
        if len(self.t) == len(grid) and np.array_equal(self.t, grid):
            return self.states.copy()
        return CubicSpline(self.t, self.states, axis=0)(grid)


def _compile(p: MPoly, xv: str, yv: str, params: Mapping[str, float]):
    extra = set(p.gens) - {xv, yv}
    if extra:
        raise ValueError(f"numeric integration needs a constant-coefficient system; found generators {sorted(extra)}")
    missing = p.param_symbols() - set(params)
    if missing:
        raise ValueError(f"missing numeric values for parameters {sorted(missing)}")
    ix = p.gens.index(xv) if xv in p.gens else None
    iy = p.gens.index(yv) if yv in p.gens else None
    terms = []
    for m, c in p.terms.items():
        terms.append((c.evaluate(params), m[ix] if ix is not None else 0, m[iy] if iy is not None else 0))
    return terms


def _rhs(ft, gt):
    def rhs(state: np.ndarray) -> np.ndarray:
        x, y = state
        fx = sum(c * x ** i * y ** j for c, i, j in ft)
        gy = sum(c * x ** i * y ** j for c, i, j in gt)
        return np.array([fx, gy])
    return rhs


# continuous extension: y(t + th*h) = y + h * sum_s k_s * (P[s] . (th, th^2, th^3, th^4))
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def _dp_step(rhs, y, h, k0):
    k = [k0]
    for s in range(1, 7):
        yi = y + h * sum(a * kk for a, kk in zip(_A[s], k))
        k.append(rhs(yi))
    K = np.array(k)
    y5 = y + h * (_B5 @ K)
    err = h * (_E @ K)
    return y5, err, K


def _dense(y, h, K, theta: float) -> np.ndarray:
    powers = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
    return y + h * (K.T @ (_P @ powers))


def integrate(sys: PlanarSystem, params: Mapping[str, float], ic: Sequence[float], horizon: float,
              rtol: float = 1e-10, atol: float | None = None, n_out: int = 400,
              fixed_step: float | None = None) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) with samples on a uniform grid of ``n_out`` intervals.

    Grid values come from the pair's continuous extension; only the last step
    is shortened to land on the horizon.  ``fixed_step`` disables adaptivity
    (used for order measurements).
    """
    if not (1e-14 <= rtol <= 1e-3):
        raise ValueError(f"rtol must lie in [1e-14, 1e-3], got {rtol}")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if n_out < 200:
        raise ValueError("at least 200 output intervals are required")
    atol = rtol if atol is None else atol
    params = {k: float(v) for k, v in params.items()}
    xv, yv = sys.vars
    rhs = _rhs(_compile(sys.f, xv, yv, params), _compile(sys.g, xv, yv, params))
    y = np.array([float(ic[0]), float(ic[1])])
    if not np.all(np.isfinite(y)):
        raise ValueError("initial condition must be finite")
    grid = np.linspace(0.0, horizon, n_out + 1)
    ts, ys = [0.0], [y.copy()]
    t = 0.0
    k0 = rhs(y)
    if fixed_step is not None:
        h = float(fixed_step)
    else:
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((k0 / scale) ** 2))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    min_step = 1e-14 * horizon
    gi = 1
    steps = 0
    reason = HORIZON_REACHED
    while t < horizon:
        last = h >= horizon - t
        h_try = horizon - t if last else h
        if h_try < min_step and not last:
            reason = STEP_UNDERFLOW
            break
        y_new, err, K = _dp_step(rhs, y, h_try, k0)
        if not np.all(np.isfinite(y_new)):
            if fixed_step is None and h_try > min_step:
                h = h_try * 0.2
                continue
            raise IntegrationError(f"non-finite state at t={t + h_try:.17g} (last finite state {y.tolist()})")
        if fixed_step is None:
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            en = float(np.sqrt(np.mean((err / sc) ** 2)))
            if en > 1.0:
                h = h_try * max(0.2, 0.9 * en ** -0.2)
                if h < min_step:
                    reason = STEP_UNDERFLOW
                    break
                continue
            grow = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
        t_new = horizon if last else t + h_try
        while gi < len(grid) and grid[gi] < t_new:
            ts.append(float(grid[gi]))
            ys.append(_dense(y, h_try, K, (grid[gi] - t) / h_try))
            gi += 1
        steps += 1
        t, y, k0 = t_new, y_new, K[6]
        ts.append(t)
        ys.append(y.copy())
        if gi < len(grid) and grid[gi] <= t:
            gi += 1
        else:
            ts.pop()
            ys.pop()
        if fixed_step is None:
            h = h_try * grow
        if abs(y[0]) + abs(y[1]) >= BLOW_UP_BOUND:
            if ts[-1] < t:
                ts.append(t)
                ys.append(y.copy())
            reason = BLOW_UP
            break
    if reason == STEP_UNDERFLOW and t > ts[-1]:
        ts.append(t)
        ys.append(y.copy())
    return Trajectory(params, (float(ic[0]), float(ic[1])), np.array(ts), np.array(ys), reason,
                      rtol, atol, (xv, yv), steps)


def write_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y"])
        for t, (x, y) in zip(traj.t, traj.states):
            w.writerow([f"{t:.17g}", f"{x:.17g}", f"{y:.17g}"])


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:]


def conservation_drift(H: LogLinearExpr, traj: Trajectory) -> float:
    """max |H(t) - H(0)| / max(1, |H(0)|) over the samples."""
    for c, G in H.logs:
        vals = np.array([G.evaluate(traj.values_at(i), traj.params) for i in range(len(traj.t))])
        if np.any(vals == 0) or (np.any(vals > 0) and np.any(vals < 0)):
            raise ValueError(f"log argument {G} changes sign or vanishes along the trajectory")
    hv = np.array([H.evaluate(traj.values_at(i), traj.params) for i in range(len(traj.t))])
    if not np.all(np.isfinite(hv)):
        raise ValueError("first integral is not finite along the trajectory")
    return float(np.max(np.abs(hv - hv[0])) / max(1.0, abs(hv[0])))


@dataclass
class RelationReport:
    monomials: list[str]
    samples: int
    spectrum: list[float]
    ratio: float
    threshold: float = NO_RELATION_THRESHOLD
    relation_threshold: float = RELATION_THRESHOLD
    verdict: str = field(init=False)

    def __post_init__(self):
        if self.ratio > self.threshold:
            self.verdict = "NoRelationEvidence"
        elif self.ratio < self.relation_threshold:
            self.verdict = "RelationEvidence"
        else:
            self.verdict = "Inconclusive"


def _exponent_tuples(nvars: int, maxdeg: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(maxdeg + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def common_grid(trajs: Sequence[Trajectory], samples: int | None = None) -> np.ndarray:
    """Union of sample times inside the shared time range, or a uniform grid of ``samples`` points."""
    t_end = min(tr.final_time for tr in trajs)
    t0 = max(float(tr.t[0]) for tr in trajs)
    if samples is not None:
        return np.linspace(t0, t_end, samples)
    allt = np.unique(np.concatenate([tr.t[(tr.t >= t0) & (tr.t <= t_end)] for tr in trajs]))
    return allt


def relation_probe(trajs: Sequence[Trajectory], maxdeg: int, columns: Sequence[np.ndarray] = ()) -> RelationReport:
    """Rank test of the monomial evaluation matrix via column-pivoted QR.

    ``columns`` appends extra coordinates sampled on the common grid (used to
    plant relations in tests).
    """
    if not trajs:
        raise ValueError("at least one trajectory is required")
    if maxdeg < 1:
        raise ValueError("maxdeg must be at least 1")
    grid = common_grid(trajs)
    coords = [tr.resample(grid) for tr in trajs]
    data = np.column_stack([c for st in coords for c in (st[:, 0], st[:, 1])] + [np.asarray(c) for c in columns])
    names = [f"{v}{i + 1}" for i in range(len(trajs)) for v in ("x", "y")] + [f"w{j + 1}" for j in range(len(columns))]
    exps = _exponent_tuples(data.shape[1], maxdeg)
    if len(grid) < 3 * len(exps):
        raise ValueError(f"too few samples: {len(grid)} for {len(exps)} monomials (need {3 * len(exps)})")
    M = np.ones((len(grid), len(exps)))
    labels = []
    for j, e in enumerate(exps):
        for i, k in enumerate(e):
            if k:
                M[:, j] *= data[:, i] ** k
        labels.append("*".join(f"{names[i]}^{k}" if k > 1 else names[i] for i, k in enumerate(e) if k) or "1")
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms == 0):
        raise ValueError("a monomial column vanishes identically on the grid")
    M = M / norms
    _, R, _ = qr(M, mode="economic", pivoting=True)
    spectrum = sorted((abs(float(v)) for v in np.diag(R)), reverse=True)
    ratio = spectrum[-1] / spectrum[0] if spectrum[0] > 0 else 0.0
    return RelationReport(labels, len(grid), spectrum, ratio)


def closed_form_error_exp(rtol: float | None = None, fixed_step: float | None = None) -> float:
    """|x(1) - e| for x' = x, y' = y from (1, 1); a calibration problem for the integrator."""
    from .exprio import SymbolTable, parse_poly
    tab = SymbolTable(("X", "Y"), ())
    sys = PlanarSystem("X", "Y", parse_poly("X", tab), parse_poly("Y", tab))
    tr = integrate(sys, {}, (1.0, 1.0), 1.0, rtol=rtol or 1e-10, fixed_step=fixed_step)
    return abs(float(tr.x[-1]) - math.e)
