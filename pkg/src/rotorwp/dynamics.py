"""Energy spectra, unitary phase evolution and characteristic time scales.

Internally hbar = 1, so a model's energies set the time unit (hbar / unit).
Physical units are carried only as a label.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import constants

from .errors import (
    DegenerateSpectrumError,
    FormatError,
    InsufficientDataError,
    InvalidArgumentError,
    MissingLevelError,
)
from .wavepacket import parse_header

TWO_PI = 2.0 * math.pi

_UNIT_SCALE_EV = {"eV": 1.0, "keV": 1e3, "MeV": 1e6, "GeV": 1e9}


def time_unit_seconds(unit):
    """Seconds per internal time unit when energies are in `unit` (hbar = 1)."""
    try:
        scale = _UNIT_SCALE_EV[unit]
    except KeyError:
        raise InvalidArgumentError(f"unknown energy unit {unit!r}") from None
    return constants.hbar / constants.e / scale


@dataclass(frozen=True)
class RigidRotor:
    omega0: float = 1.0
    unit: str | None = None

    def __post_init__(self):
        if not self.omega0 > 0:
            raise InvalidArgumentError(f"omega0 must be positive, got {self.omega0}")

    def energies(self, I):
        I = np.asarray(I)
        return self.omega0 * I * (I + 1.0)


@dataclass(frozen=True)
class Polynomial:
    """E_I = a x + b x^2 with x = I(I+1)."""

    a: float
    b: float = 0.0
    unit: str | None = None

    def energies(self, I):
        x = np.asarray(I) * (np.asarray(I) + 1.0)
        return self.a * x + self.b * x * x

    def derivatives(self, I):
        x = I * (I + 1.0)
        d1 = (self.a + 2.0 * self.b * x) * (2.0 * I + 1.0)
        d2 = 2.0 * self.b * (2.0 * I + 1.0) ** 2 + 2.0 * (self.a + 2.0 * self.b * x)
        return d1, d2


@dataclass(frozen=True)
class Tabulated:
    levels: dict = field(default_factory=dict)
    unit: str | None = None

    def __post_init__(self):
        lv = {int(k): float(v) for k, v in sorted(self.levels.items())}
        if any(k < 0 for k in lv):
            raise InvalidArgumentError("level spins must be non-negative")
        e = list(lv.values())
        if any(b < a for a, b in zip(e, e[1:])):
            raise InvalidArgumentError("tabulated levels must be non-decreasing in I")
        object.__setattr__(self, "levels", lv)

    def energies(self, I):
        I = np.atleast_1d(np.asarray(I))
        out = np.empty(I.shape)
        for k, spin in enumerate(I.flat):
            try:
                out.flat[k] = self.levels[int(spin)]
            except KeyError:
                raise MissingLevelError(int(spin)) from None
        return out

    def derivatives(self, I):
        """Central differences over I-2, I, I+2 on the even lattice."""
        lv = self.levels
        d1 = (lv[I + 2] - lv[I - 2]) / 4.0
        d2 = (lv[I + 2] - 2.0 * lv[I] + lv[I - 2]) / 4.0
        return d1, d2


def level_energies(wp, model):
    """E_I for I = 0..i_max; rows with no weight are not looked up."""
    present = np.nonzero(np.any(wp.coeffs != 0, axis=1))[0]
    energies = np.zeros(wp.i_max + 1)
    if present.size:
        energies[present] = model.energies(present)
    return energies


def phase_factors(energies, times):
    """exp(-i E t) for every (t, E) pair, shape (len(times), len(energies)).

    E t / 2pi is reduced mod 1 in extended precision so that times far
    beyond T_rev stay accurate.
    """
    e = np.asarray(energies, dtype=np.longdouble)
    t = np.atleast_1d(np.asarray(times, dtype=np.longdouble))
    cycles = t[:, None] * e[None, :] / np.longdouble(TWO_PI)
    frac = np.asarray(cycles - np.floor(cycles), dtype=float)
    return np.exp(-1j * TWO_PI * frac)


def evolve(wp, model, t):
    """Multiply each b_IM by exp(-i E_I t)."""
    phase = phase_factors(level_energies(wp, model), [t])[0]
    return wp.replace(wp.coeffs * phase[:, None])


@dataclass(frozen=True)
class TimeScales:
    t_cl: float
    t_rev: float
    i_bar_used: float


def _derivatives_at(model, i_bar):
    if isinstance(model, Polynomial):
        return model.derivatives(float(i_bar))
    lo = 2 * int(math.floor(i_bar / 2.0))
    hi = lo + 2
    try:
        d_lo = model.derivatives(lo)
        d_hi = model.derivatives(hi) if i_bar > lo else d_lo
    except KeyError as exc:
        raise InvalidArgumentError(
            f"tabulated levels around I={i_bar:.3f} are insufficient for the derivative stencil "
            f"(missing I={exc.args[0]})"
        ) from None
    w = (i_bar - lo) / 2.0
    return tuple((1.0 - w) * a + w * b for a, b in zip(d_lo, d_hi))


def time_scales(model, i_bar):
    """Classical period and revival time at the mean spin i_bar.

    T_rev = 2 pi / (|E''| / 2), T_cl = 2 pi / |E'|.
    """
    if i_bar < 0:
        raise InvalidArgumentError(f"i_bar must be non-negative, got {i_bar}")
    if isinstance(model, RigidRotor):
        t_rev = TWO_PI / model.omega0
        return TimeScales(t_rev / (2.0 * i_bar + 1.0), t_rev, float(i_bar))
    d1, d2 = _derivatives_at(model, i_bar)
    if abs(d2) < 1e-15:
        raise DegenerateSpectrumError(f"E'' = {d2:.3g} at I={i_bar:.4g}; revival time undefined")
    t_cl = TWO_PI / abs(d1) if d1 != 0 else math.inf
    return TimeScales(t_cl, TWO_PI / (0.5 * abs(d2)), float(i_bar))


def revival_time(model, i_bar):
    return time_scales(model, i_bar).t_rev


@dataclass(frozen=True)
class FitResult:
    model: Polynomial
    rms: float
    n_levels: int


def fit_polynomial(levels, unit=None):
    """Least-squares fit of E_I = a x + b x^2 in x = I(I+1)."""
    if isinstance(levels, Tabulated):
        unit = unit or levels.unit
        levels = levels.levels
    spins = sorted(levels)
    if len(spins) < 3:
        raise InsufficientDataError(f"need at least 3 levels, got {len(spins)}")
    I = np.array(spins, dtype=float)
    E = np.array([levels[s] for s in spins], dtype=float)
    x = I * (I + 1.0)
    A = np.column_stack([x, x * x])
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0] = 1.0
    sol, *_ = np.linalg.lstsq(A / scale, E, rcond=None)
    a, b = sol / scale
    resid = E - (a * x + b * x * x)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return FitResult(Polynomial(float(a), float(b), unit), rms, len(spins))


def read_levels(path):
    levels = {}
    unit = None
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                kv = parse_header(line)
                if kv and kv[0] == "unit":
                    unit = kv[1]
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'I energy'")
            try:
                spin, energy = int(parts[0]), float(parts[1])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if spin in levels:
                raise FormatError(f"{path}:{lineno}: duplicate level I={spin}")
            levels[spin] = energy
    return Tabulated(levels, unit)


def write_levels(model, path, headers=None):
    lines = ["# rotorwp level file"]
    if model.unit:
        lines.append(f"# unit: {model.unit}")
    for k, v in (headers or {}).items():
        lines.append(f"# {k}: {v}")
    for spin, energy in model.levels.items():
        lines.append(f"{spin} {energy!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def format_fit_report(fit, headers=None):
    lines = ["# rotorwp fit report"]
    for k, v in (headers or {}).items():
        lines.append(f"# {k}: {v}")
    lines += [
        "model: a*I(I+1) + b*[I(I+1)]^2",
        f"a: {fit.model.a!r}",
        f"b: {fit.model.b!r}",
        f"rms: {fit.rms!r}",
        f"n_levels: {fit.n_levels}",
        f"unit: {fit.model.unit or 'unspecified'}",
    ]
    return "\n".join(lines) + "\n"
