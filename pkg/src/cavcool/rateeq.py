"""Linear rate equations for the phonon number and first-order coherences.

The state vector is ``[m, x202, x203, x302, x303, x212, ..., x333]``
(see ``STATE_NAMES``); ``x_ijk`` is the first-order part of
``<B_i Sigma_j C_k>`` with

* ``B_2 = b + b^dagger``, ``B_3 = i(b - b^dagger)``,
* ``Sigma_0 = 1``, ``Sigma_1 = sigma^+ sigma^-``, ``Sigma_2 = sigma^- + sigma^+``,
  ``Sigma_3 = i(sigma^- - sigma^+)``,
* ``C_2 = c + c^dagger``, ``C_3 = i(c - c^dagger)``.

The zeroth-order phonon number in the ``(1 + 2 m)`` source terms is
identified with the dynamical ``m``, which closes the system as
``dy/dt = M y + b``.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .analytic import BlochState, CoolingLaw, bloch_steady
from .csvfmt import fmt
from .errors import SingularSystemError, StepTooLargeError
from .params import SystemParams, gamma_n

STATE_NAMES = (
    "m",
    "x202", "x203", "x302", "x303",
    "x212", "x213", "x312", "x313",
    "x222", "x223", "x322", "x323",
    "x232", "x233", "x332", "x333",
)  # fmt: skip
INDEX = {name: i for i, name in enumerate(STATE_NAMES)}
DIM = len(STATE_NAMES)

# indices of each j-block of coherences inside the state vector
BLOCKS = {j: [INDEX[f"x{i}{j}{k}"] for i in (2, 3) for k in (2, 3)] for j in range(4)}

_RCOND_MIN = 1e-14


@dataclass(frozen=True)
class RateSystem:
    """Coefficient matrix and source vector of ``dy/dt = M y + b``."""

    M: np.ndarray
    b: np.ndarray
    omega_max: float = 0.0

    def __post_init__(self):
        self.M.setflags(write=False)
        self.b.setflags(write=False)

    def rhs(self, y: np.ndarray) -> np.ndarray:
        return self.M @ y + self.b


def assemble(params: SystemParams, z: BlochState | None = None) -> RateSystem:
    """Build the 17-dimensional rate system.

    ``z`` defaults to the stationary Bloch state; general values (including
    nonzero ``z2``) are accepted so the z2 couplings can be exercised.
    """
    p = params
    if z is None:
        z = bloch_steady(p.omega, p.gamma_atom)
    nu, d, om, eg = p.nu, p.delta, p.omega, p.eta_g
    g0, g1, g2 = (gamma_n(n, p.kappa, p.gamma_atom) for n in (0, 1, 2))
    M = np.zeros((DIM, DIM))
    b = np.zeros(DIM)

    def row(target, couplings, source=0.0, doubled=False):
        # doubled: source carries the factor (1 + 2m), so 2*source lands on column m
        r = INDEX[target]
        for name, coeff in couplings:
            M[r, INDEX[name]] += coeff
        b[r] += source
        if doubled:
            M[r, 0] += 2.0 * source

    M[0, INDEX["x322"]] = 0.5 * eg
    M[0, INDEX["x333"]] = 0.5 * eg

    # j = 0
    row("x202", [("x302", -nu), ("x203", -d), ("x202", -0.5 * g0)], -eg * z.z3, doubled=True)
    row("x203", [("x303", -nu), ("x202", d), ("x203", -0.5 * g0)], eg * z.z2, doubled=True)
    row("x302", [("x202", nu), ("x303", -d), ("x302", -0.5 * g0)], eg * z.z2)
    row("x303", [("x203", nu), ("x302", d), ("x303", -0.5 * g0)], eg * z.z3)
    # j = 1
    row("x212", [("x312", -nu), ("x213", -d), ("x232", 0.5 * om), ("x212", -0.5 * g2)])
    row("x213", [("x313", -nu), ("x212", d), ("x233", 0.5 * om), ("x213", -0.5 * g2)])
    row("x312", [("x212", nu), ("x313", -d), ("x332", 0.5 * om), ("x312", -0.5 * g2)])
    row("x313", [("x213", nu), ("x312", d), ("x333", 0.5 * om), ("x313", -0.5 * g2)])
    # j = 2
    row("x222", [("x322", -nu), ("x223", -d), ("x222", -0.5 * g1)])
    row("x223", [("x323", -nu), ("x222", d), ("x223", -0.5 * g1)], 2 * eg * z.z1, doubled=True)
    row("x322", [("x222", nu), ("x323", -d), ("x322", -0.5 * g1)], 2 * eg * z.z1)
    row("x323", [("x223", nu), ("x322", d), ("x323", -0.5 * g1)])
    # j = 3
    row(
        "x232",
        [("x332", -nu), ("x233", -d), ("x202", om), ("x212", -2 * om), ("x232", -0.5 * g1)],
        -2 * eg * z.z1,
        doubled=True,
    )
    row("x233", [("x333", -nu), ("x232", d), ("x203", om), ("x213", -2 * om), ("x233", -0.5 * g1)])
    row("x332", [("x232", nu), ("x333", -d), ("x302", om), ("x312", -2 * om), ("x332", -0.5 * g1)])
    row(
        "x333",
        [("x233", nu), ("x332", d), ("x303", om), ("x313", -2 * om), ("x333", -0.5 * g1)],
        2 * eg * z.z1,
    )
    return RateSystem(M, b, p.omega_max)


def max_step(params: SystemParams) -> float:
    return 0.01 / params.omega_max


def _rk4_affine(M: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """One classical RK4 step of dy/dt = My + b written as y -> R y + s."""
    h = dt * M
    eye = np.eye(len(b))
    h2 = h @ h
    h3 = h2 @ h
    R = eye + h + h2 / 2 + h3 / 6 + h3 @ h / 24
    s = dt * (eye + h / 2 + h2 / 6 + h3 / 24) @ b
    return R, s


def _affine_power(R: np.ndarray, s: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Compose the affine map y -> R y + s with itself ``n`` times."""
    out_R, out_s = np.eye(len(s)), np.zeros_like(s)
    while n:
        if n & 1:
            out_R, out_s = R @ out_R, R @ out_s + s
        R, s = R @ R, R @ s + s
        n >>= 1
    return out_R, out_s


def integrate(
    sys: RateSystem,
    y0: np.ndarray,
    t_final: float,
    dt: float,
    samples: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step RK4 propagation of the rate system.

    Because the system is linear with constant coefficients, one RK4 step
    is an affine map; whole strides between samples are applied at once by
    binary powering of that map, so very long runs stay cheap.  The number
    of steps is ``round(t_final / dt)``, split as evenly as possible into
    ``samples`` strides.

    Returns
    -------
    t : ndarray, shape (k,)
    y : ndarray, shape (k, 17)
    """
    if t_final <= 0:
        raise ValueError(f"t_final must be > 0, got {t_final}")
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if sys.omega_max > 0 and dt > 0.01 / sys.omega_max * (1 + 1e-12):
        raise StepTooLargeError(
            f"step too large: dt = {dt} exceeds 0.01/omega_max = {0.01 / sys.omega_max}"
        )
    n_steps = max(1, round(t_final / dt))
    samples = max(1, min(samples, n_steps))
    R, s = _rk4_affine(np.asarray(sys.M), np.asarray(sys.b), dt)
    bounds = np.linspace(0, n_steps, samples + 1).round().astype(int)
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    y = np.array(y0, dtype=float)
    ts = [0.0]
    ys = [y.copy()]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        stride = int(hi - lo)
        if stride not in cache:
            cache[stride] = _affine_power(R, s, stride)
        Rk, sk = cache[stride]
        y = Rk @ y + sk
        ts.append(hi * dt)
        ys.append(y.copy())
    return np.array(ts), np.array(ys)


def _solve(A: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    with warnings.catch_warnings():
        # exact zero pivots are caught by the condition estimate below
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A, check_finite=True)
    anorm = np.linalg.norm(A, 1)
    rcond, info = dgecon(lu, anorm)
    if info != 0 or not rcond > _RCOND_MIN:
        raise SingularSystemError(f"{what} (reciprocal condition number {rcond:.3g})")
    return lu_solve((lu, piv), rhs)


def steady_state(sys: RateSystem) -> np.ndarray:
    """Solve ``M y = -b`` by LU decomposition with partial pivoting.

    Singular when the cooling and heating contributions balance exactly
    (gamma_c = 0).
    """
    M, b = np.asarray(sys.M), np.asarray(sys.b)
    y = _solve(M, -b, "no unique steady state")
    resid = np.max(np.abs(M @ y + b))
    bnorm = np.max(np.abs(b))
    limit = 1e-10 * bnorm if bnorm > 0 else 1e-14
    if resid >= limit:
        raise SingularSystemError(f"no unique steady state: residual {resid:.3g} >= {limit:.3g}")
    return y


def eliminate(params: SystemParams, order: str = "joint") -> CoolingLaw:
    """Adiabatically eliminate the 16 coherences numerically.

    The coherence block is solved for two right-hand sides: the constant
    sources (giving ``c`` through the m row) and the column that multiplies
    ``m`` (giving ``-gamma_c``).  ``order="blockwise"`` first solves the
    self-contained j = 2 block and then the remaining 12 equations, which
    is how the elimination is done by hand; both orders give the same law.
    """
    if params.omega == 0:
        return CoolingLaw.no_drive()
    sys = assemble(params)
    M, b = np.asarray(sys.M), np.asarray(sys.b)
    rhs = -np.column_stack([b[1:], M[1:, 0]])
    A = M[1:, 1:]
    if order == "joint":
        sol = _solve(A, rhs, "elimination singular")
    elif order == "blockwise":
        sol = _blockwise(A, rhs)
    else:
        raise ValueError(f"unknown elimination order {order!r}")
    coupling = M[0, 1:]
    c_source = float(coupling @ sol[:, 0])
    gamma_c = -float(coupling @ sol[:, 1])
    return CoolingLaw.from_rates(gamma_c, c_source)


def _blockwise(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # indices relative to the 16-dim coherence vector
    first = np.array(BLOCKS[2]) - 1
    rest = np.array(sorted(set(range(DIM - 1)) - set(first)))
    if np.any(A[np.ix_(first, rest)]):
        raise AssertionError("j = 2 block is expected to be closed")
    sol = np.empty_like(rhs)
    sol[first] = _solve(A[np.ix_(first, first)], rhs[first], "elimination singular")
    sol[rest] = _solve(
        A[np.ix_(rest, rest)],
        rhs[rest] - A[np.ix_(rest, first)] @ sol[first],
        "elimination singular",
    )
    return sol


def write_trajectory_csv(t: np.ndarray, y: np.ndarray, out: TextIO, header_comment: str | None = None):
    if header_comment:
        out.write(f"# {header_comment}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", *STATE_NAMES])
    for ti, yi in zip(t, y):
        writer.writerow([fmt(ti), *(fmt(v) for v in yi)])


def trajectory_csv_text(t: np.ndarray, y: np.ndarray) -> str:
    buf = io.StringIO()
    write_trajectory_csv(t, y, buf)
    return buf.getvalue()


def save_trajectory(path: str | Path, t: np.ndarray, y: np.ndarray):
    with open(path, "w", newline="") as fh:
        write_trajectory_csv(t, y, fh)
