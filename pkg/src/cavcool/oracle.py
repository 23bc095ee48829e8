"""Full master-equation reference on a truncated atom x phonon x cavity space.

Operators act on ``C^2 (x) C^n_b (x) C^n_c`` in that order; the atomic basis
is ``(|0>, |1>)``.  Bosonic modes use the standard truncated lowering
matrix, so ``[a, a^dagger]`` deviates from the identity in the top Fock
level; :func:`truncation_check` reports how much weight sits there.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TextIO

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, norm as sparse_norm, onenormest, splu

from .csvfmt import fmt
from .errors import IntegrationUnstableError, ParameterError, SingularSystemError, StepTooLargeError
from .params import SystemParams

TRUNCATION_LIMIT = 1e-4
TRACE_ABORT = 1e-6
# below this reciprocal condition number the stationary state is treated as non-unique
DEGENERATE_RCOND = 1e-13


@dataclass(frozen=True)
class FockConfig:
    n_b: int = 6
    n_c: int = 6
    max_liouvillian_dim: int = 16384

    def __post_init__(self):
        if self.n_b < 2 or self.n_c < 2:
            raise ParameterError(f"Fock truncations must be >= 2, got n_b={self.n_b}, n_c={self.n_c}")
        if self.dim**2 > self.max_liouvillian_dim:
            raise ParameterError(
                f"Liouvillian dimension {self.dim**2} exceeds cap {self.max_liouvillian_dim}"
            )

    @property
    def dim(self) -> int:
        return 2 * self.n_b * self.n_c


def destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def _dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


@dataclass
class FockModel:
    params: SystemParams
    cfg: FockConfig
    node_sign: int
    hamiltonian: np.ndarray
    collapse: list[np.ndarray]
    b: np.ndarray
    c: np.ndarray
    sigma_minus: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.cfg.dim

    @cached_property
    def _heff(self) -> np.ndarray:
        heff = self.hamiltonian.copy()
        for jump in self.collapse:
            heff -= 0.5j * _dag(jump) @ jump
        return heff

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        """Lindblad generator applied to a Hermitian ``rho``."""
        x = -1j * (self._heff @ rho)
        out = x + _dag(x)
        for jump in self.collapse:
            out += jump @ rho @ _dag(jump)
        return out

    @cached_property
    def liouvillian(self) -> sparse.csr_matrix:
        """Superoperator acting on row-major ``rho.ravel()``."""
        return lindblad_superoperator(self.hamiltonian, self.collapse)

    def heisenberg(self, op: np.ndarray) -> np.ndarray:
        """Adjoint generator: d<A>/dt = <heisenberg(A)>."""
        h = self.hamiltonian
        out = 1j * (h @ op - op @ h)
        for jump in self.collapse:
            jd = _dag(jump)
            out += jd @ op @ jump - 0.5 * (op @ jd @ jump + jd @ jump @ op)
        return out

    def x_operator(self, i: int, j: int, k: int) -> np.ndarray:
        """``B_i Sigma_j C_k`` for i, k in 0..5 and j in 0..3."""
        nb, nc = self.cfg.n_b, self.cfg.n_c
        bb = _mode_family(destroy(nb))[i]
        cc = _mode_family(destroy(nc))[k]
        sm = np.array([[0, 1], [0, 0]], dtype=complex)
        ss = [np.eye(2), _dag(sm) @ sm, sm + _dag(sm), 1j * (sm - _dag(sm))][j]
        return np.kron(np.kron(ss, bb), cc)


def lindblad_superoperator(h: np.ndarray, collapse: list[np.ndarray]) -> sparse.csr_matrix:
    eye = sparse.identity(len(h), dtype=complex, format="csr")
    heff = sparse.csr_matrix(h, dtype=complex)
    jumps = [sparse.csr_matrix(j) for j in collapse]
    for jump in jumps:
        heff = heff - 0.5j * (jump.conj().T @ jump)
    # vec(A rho B) = kron(A, B^T) vec(rho)
    L = -1j * sparse.kron(heff, eye) + 1j * sparse.kron(eye, heff.conj())
    for jump in jumps:
        L = L + sparse.kron(jump, jump.conj())
    L = sparse.csr_matrix(L)
    L.eliminate_zeros()
    return L


def _mode_family(a: np.ndarray) -> list[np.ndarray]:
    ad = _dag(a)
    return [
        np.eye(len(a), dtype=complex),
        ad @ a,
        a + ad,
        1j * (a - ad),
        a @ a + ad @ ad,
        1j * (a @ a - ad @ ad),
    ]


def build_model(params: SystemParams, cfg: FockConfig | None = None, node_sign: int = 1) -> FockModel:
    """Assemble the interaction-picture Hamiltonian and dissipators.

    ``node_sign`` selects the sign of the field gradient at the trap
    centre; it has no observable effect on the phonon number.
    """
    cfg = cfg or FockConfig()
    if node_sign not in (1, -1):
        raise ParameterError(f"node_sign must be +1 or -1, got {node_sign}")
    p = params
    i2, ib, ic = np.eye(2), np.eye(cfg.n_b), np.eye(cfg.n_c)
    sm1 = np.array([[0, 1], [0, 0]], dtype=complex)
    b = np.kron(np.kron(i2, destroy(cfg.n_b)), ic)
    c = np.kron(np.kron(i2, ib), destroy(cfg.n_c))
    sm = np.kron(np.kron(sm1, ib), ic)
    bd, cd, sp = _dag(b), _dag(c), _dag(sm)
    h = (
        p.nu * bd @ b
        + p.delta * cd @ c
        + 0.5 * p.omega * (sm + sp)
        + node_sign * p.eta_g * (b + bd) @ (sp @ c + sm @ cd)
    )
    if np.max(np.abs(h - _dag(h))) > 1e-12:
        raise AssertionError("Hamiltonian is not Hermitian")
    collapse = []
    if p.kappa > 0:
        collapse.append(math.sqrt(p.kappa) * c)
    if p.gamma_atom > 0:
        collapse.append(math.sqrt(p.gamma_atom) * sm)
    observables = {"m": bd @ b, "pop_e": sp @ sm, "n_cav": cd @ c}
    return FockModel(p, cfg, node_sign, h, collapse, b, c, sm, observables)


def initial_state(model: FockModel, phonon_fock: int = 0, phonon_thermal: float | None = None) -> np.ndarray:
    """Atom in |0>, cavity in vacuum, phonon in a Fock or (truncated) thermal state."""
    nb, nc = model.cfg.n_b, model.cfg.n_c
    if phonon_thermal is not None:
        if phonon_thermal < 0:
            raise ParameterError("thermal occupation must be >= 0")
        ratio = phonon_thermal / (1.0 + phonon_thermal)
        pops = ratio ** np.arange(nb)
        pops /= pops.sum()
    else:
        if not 0 <= phonon_fock < nb:
            raise ParameterError(f"phonon Fock state {phonon_fock} outside truncation {nb}")
        pops = np.zeros(nb)
        pops[phonon_fock] = 1.0
    atom = np.diag([1.0, 0.0])
    cav = np.zeros((nc, nc))
    cav[0, 0] = 1.0
    return np.kron(np.kron(atom, np.diag(pops)), cav).astype(complex)


@dataclass
class OracleTrajectory:
    t: np.ndarray
    records: dict[str, np.ndarray]
    max_trace_error: float
    max_hermiticity_error: float
    final_rho: np.ndarray

    def __getitem__(self, key: str) -> np.ndarray:
        return self.records[key]

    def write_csv(self, out: TextIO, header_comment: str | None = None):
        if header_comment:
            out.write(f"# {header_comment}\n")
        names = list(self.records)
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", *names])
        for n, t in enumerate(self.t):
            writer.writerow([fmt(t), *(fmt(self.records[k][n]) for k in names)])


def _check_density_matrix(rho: np.ndarray, dim: int):
    if rho.shape != (dim, dim):
        raise ParameterError(f"rho must be {dim}x{dim}, got {rho.shape}")
    if np.max(np.abs(rho - _dag(rho))) > 1e-10:
        raise ParameterError("rho must be Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ParameterError("rho must have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ParameterError("rho must be positive semidefinite")


def evolve(
    model: FockModel,
    rho0: np.ndarray,
    t_final: float,
    dt: float | None = None,
    samples: int = 200,
    x_indices: list[tuple[int, int, int]] | None = None,
) -> OracleTrajectory:
    """Integrate the master equation with fixed-step RK4.

    The step actually used is ``t_final / ceil(t_final / dt)`` so the run
    ends exactly at ``t_final``.  ``x_indices`` adds ``x_ijk`` columns.

    Raises
    ------
    IntegrationUnstableError
        If the trace drifts by more than 1e-6.
    """
    limit = 0.01 / model.params.omega_max
    dt = limit if dt is None else dt
    if dt <= 0 or dt > limit * (1 + 1e-12):
        raise StepTooLargeError(f"step too large: dt = {dt} exceeds 0.01/omega_max = {limit}")
    if t_final <= 0:
        raise ParameterError(f"t_final must be > 0, got {t_final}")
    rho = np.array(rho0, dtype=complex)
    _check_density_matrix(rho, model.dim)

    ops = dict(model.observables)
    for ijk in x_indices or []:
        ops["x{}{}{}".format(*ijk)] = model.x_operator(*ijk)
    names = list(ops)
    # tr(A rho) = sum_ij A^T_ij rho_ij
    probe = np.array([ops[k].T.ravel() for k in names])

    n_steps = math.ceil(t_final / dt - 1e-9)
    h = t_final / n_steps
    d = model.dim
    L = model.liouvillian
    diag = np.arange(d) * (d + 1)
    sample_at = set(np.linspace(0, n_steps, min(samples, n_steps) + 1).round().astype(int).tolist())
    ts, rows = [], []
    max_trace = max_herm = 0.0
    v = rho.ravel().copy()
    for step in range(n_steps + 1):
        if step in sample_at:
            ts.append(step * h)
            rows.append((probe @ v).real)
            r = v.reshape(d, d)
            max_herm = max(max_herm, float(np.max(np.abs(r - _dag(r)))))
        trace_err = abs(v[diag].sum().real - 1.0)
        max_trace = max(max_trace, trace_err)
        if not trace_err <= TRACE_ABORT:
            raise IntegrationUnstableError(f"integration unstable: trace error {trace_err:.3g} at t = {step * h}")
        if step == n_steps:
            break
        k1 = L @ v
        k2 = L @ (v + (0.5 * h) * k1)
        k3 = L @ (v + (0.5 * h) * k2)
        k4 = L @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    rho = v.reshape(d, d)
    data = np.array(rows)
    records = {k: data[:, n] for n, k in enumerate(names)}
    return OracleTrajectory(np.array(ts), records, max_trace, max_herm, rho)


@dataclass
class OracleSteadyState:
    """Stationary state of the master equation.

    ``rho`` is None when the stationary state is not unique (``degenerate``);
    with the phonon decoupled (eta * g = 0) ``atom_cavity`` then holds the
    unique stationary state of the atom x cavity factor.
    """

    rho: np.ndarray | None
    degenerate: bool
    residual: float
    min_eigenvalue: float
    rcond: float
    atom_cavity: np.ndarray | None = None

    def expect(self, op: np.ndarray) -> float:
        if self.rho is None:
            raise SingularSystemError("steady state not found: stationary state is degenerate")
        return float(np.trace(op @ self.rho).real)


def _null_state(L: sparse.spmatrix, dim: int) -> tuple[np.ndarray | None, float]:
    A = sparse.lil_matrix(L)
    A[0, :] = np.eye(dim).ravel()
    A = sparse.csc_matrix(A)
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = splu(A)
    except RuntimeError:  # exactly singular
        return None, 0.0
    n = dim * dim
    inv = LinearOperator(
        (n, n), matvec=lu.solve, rmatvec=lambda x: lu.solve(x, trans="H"), dtype=complex
    )
    rcond = 1.0 / (sparse_norm(A, 1) * onenormest(inv))
    if not rcond > DEGENERATE_RCOND:
        return None, float(rcond)
    rho = lu.solve(rhs).reshape(dim, dim)
    return 0.5 * (rho + _dag(rho)), float(rcond)


def steady_state(model: FockModel) -> OracleSteadyState:
    """Null vector of the Liouvillian with one row replaced by the trace.

    Raises
    ------
    SingularSystemError
        If a unique solution exists but fails the residual check.
    """
    p = model.params
    if p.kappa <= 0 or p.gamma_atom <= 0:
        raise ParameterError("steady state needs kappa > 0 and gamma_atom > 0")
    rho, rcond = _null_state(model.liouvillian, model.dim)
    if rho is None:
        atom_cavity = _atom_cavity_steady(p, model.cfg.n_c) if p.eta_g == 0 else None
        return OracleSteadyState(None, True, math.nan, math.nan, rcond, atom_cavity)
    residual = float(np.max(np.abs(model.rhs(rho))))
    if residual >= 1e-10:
        raise SingularSystemError(f"steady state not found: residual {residual:.3g}")
    min_eig = float(np.linalg.eigvalsh(rho).min())
    return OracleSteadyState(rho, False, residual, min_eig, rcond)


def _atom_cavity_steady(params: SystemParams, n_c: int) -> np.ndarray:
    # the phonon-free factor of the model; exact when eta * g = 0
    sm = np.kron(np.array([[0, 1], [0, 0]], dtype=complex), np.eye(n_c))
    c = np.kron(np.eye(2), destroy(n_c))
    h = params.delta * _dag(c) @ c + 0.5 * params.omega * (sm + _dag(sm))
    jumps = [math.sqrt(params.kappa) * c, math.sqrt(params.gamma_atom) * sm]
    rho, _ = _null_state(lindblad_superoperator(h, jumps), 2 * n_c)
    if rho is None:
        raise SingularSystemError("steady state not found for the atom-cavity factor")
    return rho


def phonon_populations(model: FockModel, rho: np.ndarray) -> np.ndarray:
    nb, nc = model.cfg.n_b, model.cfg.n_c
    r = rho.reshape(2, nb, nc, 2, nb, nc)
    return np.einsum("aibaib->i", r).real


def cavity_populations(model: FockModel, rho: np.ndarray) -> np.ndarray:
    nb, nc = model.cfg.n_b, model.cfg.n_c
    r = rho.reshape(2, nb, nc, 2, nb, nc)
    return np.einsum("aibaib->b", r).real


@dataclass(frozen=True)
class TruncationReport:
    top_phonon: float
    top_cavity: float
    threshold: float = TRUNCATION_LIMIT

    @property
    def ok(self) -> bool:
        return self.top_phonon <= self.threshold and self.top_cavity <= self.threshold


def truncation_check(model: FockModel, rho: np.ndarray, threshold: float = TRUNCATION_LIMIT) -> TruncationReport:
    top_b = max(float(phonon_populations(model, rho)[-1]), 0.0)
    top_c = max(float(cavity_populations(model, rho)[-1]), 0.0)
    return TruncationReport(top_b, top_c, threshold)
