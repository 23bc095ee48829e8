"""Physical parameters, unit convention and the slow-phonon validity check.

All rates and frequencies are angular and expressed in units of the atomic
decay rate, so ``gamma_atom`` defaults to 1.  The detuning ``delta`` is the
cavity frequency minus the atomic transition frequency (the laser is
resonant with the atom), i.e. the coefficient of c^dagger c in the rotating
frame.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

from .errors import ParameterError

LAMB_DICKE_WARN = 0.3
VALIDITY_THRESHOLD = 0.1

PARAM_KEYS = ("nu", "delta", "omega", "kappa", "gamma_atom", "eta", "g")


class LambDickeWarning(UserWarning):
    """Raised (as a warning) when eta is too large for the linearised coupling."""


@dataclass(frozen=True)
class SystemParams:
    """The seven physical parameters of the trapped particle in the cavity.

    Attributes
    ----------
    nu : float
        Trap (phonon) frequency.
    delta : float
        Atom-cavity detuning; any sign.
    omega : float
        Rabi frequency of the resonant side laser.
    kappa : float
        Cavity field decay rate.
    gamma_atom : float
        Spontaneous emission rate of the atom; sets the unit.
    eta : float
        Lamb-Dicke parameter along the cavity axis.
    g : float
        Atom-cavity coupling constant.
    """

    nu: float = 1.0
    delta: float = 1.0
    omega: float = 1.0
    kappa: float = 1.0
    gamma_atom: float = 1.0
    eta: float = 0.05
    g: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterError(f"{f.name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ParameterError(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        if self.nu <= 0:
            raise ParameterError(f"nu must be > 0, got {self.nu}")
        if self.gamma_atom <= 0:
            raise ParameterError(f"gamma_atom must be > 0, got {self.gamma_atom}")
        for name in ("omega", "kappa", "eta", "g"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.eta >= LAMB_DICKE_WARN:
            warnings.warn(
                f"eta = {self.eta} is outside the Lamb-Dicke regime (eta << 1)",
                LambDickeWarning,
                stacklevel=3,
            )

    @property
    def eta_g(self) -> float:
        return self.eta * self.g

    @property
    def omega_max(self) -> float:
        """Largest frequency scale; used to bound integrator steps."""
        return max(self.nu, abs(self.delta), self.omega, self.kappa, self.gamma_atom)

    def with_(self, **changes: float) -> "SystemParams":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    def to_json(self) -> str:
        # repr-exact floats, so a dumped parameter set reproduces a run bit for bit
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SystemParams":
        unknown = set(data) - set(PARAM_KEYS)
        if unknown:
            raise ParameterError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**data)


def load_params(path: str | Path, **overrides: float | None) -> SystemParams:
    """Read a flat JSON object of parameters; non-None overrides win."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read parameter file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParameterError(f"parameter file {path} must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return SystemParams.from_dict(data)


def gamma_n(n: int, kappa: float, gamma_atom: float) -> float:
    """Effective decay rate kappa + n * gamma_atom (negative n allowed)."""
    return kappa + n * gamma_atom


def xi_pm(delta: float, nu: float) -> tuple[float, float]:
    """Return (2(delta + nu), 2(delta - nu))."""
    return 2.0 * (delta + nu), 2.0 * (delta - nu)


@dataclass(frozen=True)
class ValidityReport:
    ratio: float
    ok: bool
    threshold: float = VALIDITY_THRESHOLD


def validate(params: SystemParams, threshold: float = VALIDITY_THRESHOLD) -> ValidityReport:
    """Check that eta*g is small against the fastest of |delta|, kappa, nu.

    The effective cooling equation needs the phonon number to evolve much
    more slowly than the coherences it is driven by.  nu > 0 keeps the
    denominator positive.
    """
    ratio = params.eta_g / max(abs(params.delta), params.kappa, params.nu)
    return ValidityReport(ratio=ratio, ok=ratio < threshold, threshold=threshold)
