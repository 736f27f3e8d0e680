"""Probability densities on angle-time grids ("quantum carpets") and their
CSV / pixel-map emission.

Legendre tables are built once per theta row and reused for every time
column.  Time columns are evaluated in fixed-size chunks, so the bytes of
the result do not depend on how many workers share the chunks.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import enum
import math

import numpy as np

from .angular import legendre_table
from .dynamics import RigidRotor, level_energies, phase_factors, time_scales
from .errors import InvalidArgumentError, SymmetryViolationError
from .revivals import Parity, infer_parity
from .wavepacket import observables, parse_header

CARPET_FORMAT = 1
CHUNK = 32


class CarpetKind(str, enum.Enum):
    EQUATORIAL = "equatorial"
    RING = "ring"


@dataclass(frozen=True)
class GridSpec:
    kind: CarpetKind = CarpetKind.EQUATORIAL
    t_max: float = 0.5
    t_samples: int = 256
    angle_samples: int = 256
    t_min: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CarpetKind(self.kind))
        if self.t_samples < 16 or self.angle_samples < 16:
            raise InvalidArgumentError("carpet resolution must be at least 16x16")
        if not self.t_max > self.t_min:
            raise InvalidArgumentError("t_max must exceed t_min")

    def times(self):
        k = np.arange(self.t_samples)
        return self.t_min + (self.t_max - self.t_min) * k / (self.t_samples - 1)


@dataclass(frozen=True, eq=False)
class CarpetGrid:
    kind: CarpetKind
    values: np.ndarray  # [angle, time]
    angles: np.ndarray
    times: np.ndarray  # units of T_rev
    t_rev: float
    meta: dict = field(default_factory=dict)

    @property
    def t_samples(self):
        return self.values.shape[1]

    @property
    def angle_samples(self):
        return self.values.shape[0]

    def column(self, tau):
        return self.values[:, int(np.argmin(np.abs(self.times - tau)))]


@dataclass(frozen=True, eq=False)
class SnapshotGrid:
    values: np.ndarray  # [theta, phi]
    theta: np.ndarray
    phi: np.ndarray
    theta_weights: np.ndarray  # quadrature weights in cos(theta)
    tau: float
    meta: dict = field(default_factory=dict)

    def sphere_integral(self):
        dphi = 2.0 * math.pi / self.phi.size
        return float(np.sum(self.theta_weights[:, None] * self.values) * dphi)


def _signed_table(wp, x, s=None):
    """Y^I_M(theta, 0) for every M in [-L, L]: shape (len(x), L+1, 2L+1)."""
    L = wp.i_max
    P = legendre_table(L, x, s)
    M = np.arange(-L, L + 1)
    sign = np.where((M < 0) & (M % 2 == 1), -1.0, 1.0)
    return P[:, :, np.abs(M)] * sign


def _weighted(wp, x, s=None):
    """b_IM Y^I_M(theta, 0), shape (len(x), L+1, 2L+1)."""
    return _signed_table(wp, x, s) * wp.coeffs[None, :, :]


def density(wp, theta, phi):
    """|Psi(theta, phi)|^2, broadcasting over theta and phi."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    if np.any((theta < 0) | (theta > math.pi)):
        raise InvalidArgumentError("theta outside [0, pi]")
    uniq, inv = np.unique(theta.ravel(), return_inverse=True)
    A = _weighted(wp, np.cos(uniq), np.sin(uniq)).sum(axis=1)  # [theta, M]
    M = wp.m_values
    psi = np.sum(A[inv] * np.exp(1j * np.outer(phi.ravel(), M)), axis=1)
    return (np.abs(psi) ** 2).reshape(theta.shape)


def _run_chunks(fn, times, workers):
    chunks = [times[i : i + CHUNK] for i in range(0, times.size, CHUNK)]
    if workers <= 1:
        parts = [fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=1)


def carpet_t_rev(wp, model):
    if isinstance(model, RigidRotor):
        return time_scales(model, 0.0).t_rev
    return time_scales(model, observables(wp).i_bar).t_rev


def _symmetric_cos(n):
    """cos(theta) on a uniform inclusive theta grid, exactly odd about pi/2."""
    theta = np.pi * np.arange(n) / (n - 1)
    x = np.cos(theta)
    half = n // 2
    x[n - half :] = -x[:half][::-1]
    if n % 2:
        x[half] = 0.0
    return theta, x, np.sin(theta)


def carpet(wp, model, spec, t_rev=None, workers=1):
    """Density over (angle, time) with time in units of T_rev.

    EQUATORIAL samples |Psi|^2 at theta = pi/2 over phi in [0, 2 pi);
    RING samples 2 pi sin(theta) |Psi|^2 over theta in [0, pi] and needs an
    axially symmetric (M = 0 only) packet.
    """
    if t_rev is None:
        t_rev = carpet_t_rev(wp, model)
    energies = level_energies(wp, model)
    taus = spec.times()
    L = wp.i_max

    if spec.kind is CarpetKind.EQUATORIAL:
        angles = 2.0 * np.pi * np.arange(spec.angle_samples) / spec.angle_samples
        W = _weighted(wp, np.array([0.0]), np.array([1.0]))[0]  # [I, M]
        E = np.exp(1j * np.outer(wp.m_values, angles))  # [M, phi]

        def block(tc):
            ph = phase_factors(energies, tc * t_rev)  # [t, I]
            psi = (ph @ W) @ E  # [t, phi]
            return (np.abs(psi) ** 2).T
    else:
        if np.any(np.delete(wp.coeffs, L, axis=1)):
            raise SymmetryViolationError("ring carpet needs an axially symmetric packet (M = 0 only)")
        angles, x, s = _symmetric_cos(spec.angle_samples)
        Y0 = legendre_table(L, x, s)[:, :, 0] * wp.coeffs[:, L][None, :]  # [theta, I]
        ring = 2.0 * np.pi * s

        def block(tc):
            ph = phase_factors(energies, tc * t_rev)  # [t, I]
            psi = Y0 @ ph.T  # [theta, t]
            return ring[:, None] * np.abs(psi) ** 2

    values = _run_chunks(block, taus, workers)
    meta = {"t_rev": repr(float(t_rev))}
    return CarpetGrid(spec.kind, values, angles, taus, float(t_rev), meta)


def snapshot(wp, model, tau, theta_samples=128, phi_samples=256, t_rev=None):
    """Full density on a Gauss-Legendre theta x uniform phi mesh at tau T_rev."""
    if t_rev is None:
        t_rev = carpet_t_rev(wp, model)
    nodes, weights = np.polynomial.legendre.leggauss(theta_samples)
    x, w = nodes[::-1], weights[::-1]  # ascending theta
    theta = np.arccos(x)
    phi = 2.0 * np.pi * np.arange(phi_samples) / phi_samples
    ph = phase_factors(level_energies(wp, model), [tau * t_rev])[0]
    A = (_signed_table(wp, x, np.sqrt(1.0 - x * x)) * (wp.coeffs * ph[:, None])[None]).sum(axis=1)
    psi = A @ np.exp(1j * np.outer(wp.m_values, phi))
    meta = {"t_rev": repr(float(t_rev))}
    return SnapshotGrid(np.abs(psi) ** 2, theta, phi, w, float(tau), meta)


def count_peaks(profile, rel_threshold=0.5):
    """Circular local maxima above rel_threshold * max(profile)."""
    p = np.asarray(profile, dtype=float)
    left, right = np.roll(p, 1), np.roll(p, -1)
    return int(np.sum((p > left) & (p >= right) & (p >= rel_threshold * p.max())))


def equatorial_clone_count(wp, profile, rel_threshold=0.5):
    """Dominant phi-maxima per fundamental period of the equatorial density.

    Even-I packets are antipodally symmetric, so their equatorial density
    repeats after pi and each clone shows up twice over a full turn.
    """
    n = count_peaks(profile, rel_threshold)
    return n // 2 if infer_parity(wp) is Parity.EVEN else n


# -- emission ---------------------------------------------------------------

_RAMP = np.array(
    [[0, 0, 0], [0, 0, 160], [160, 0, 160], [230, 60, 0], [255, 200, 0], [255, 255, 255]],
    dtype=float,
)


def _header(grid, angle_offset=0.0):
    if isinstance(grid, SnapshotGrid):
        h = {"carpet-format": CARPET_FORMAT, "kind": "snapshot", "rows": "theta (rad)",
             "columns": "phi (rad)", "tau": repr(grid.tau)}
    else:
        rows = "phi (rad)" if grid.kind is CarpetKind.EQUATORIAL else "theta (rad)"
        h = {"carpet-format": CARPET_FORMAT, "kind": grid.kind.value, "rows": rows,
             "columns": "t (units of T_rev)"}
    h.update(grid.meta)
    if angle_offset:
        h["angle-offset"] = repr(float(angle_offset))
    return h


def _axes(grid, angle_offset=0.0):
    """Row and column axes; angle_offset is added to the phi axis only."""
    if isinstance(grid, SnapshotGrid):
        return grid.theta, grid.phi + angle_offset
    if grid.kind is CarpetKind.EQUATORIAL:
        return grid.angles + angle_offset, grid.times
    return grid.angles, grid.times


def to_csv(grid, angle_offset=0.0):
    rows, cols = _axes(grid, angle_offset)
    lines = [f"# {k}: {v}" for k, v in _header(grid, angle_offset).items()]
    lines.append("angle," + ",".join(repr(float(c)) for c in cols))
    for a, row in zip(rows, grid.values):
        lines.append(repr(float(a)) + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def read_csv(path):
    """Parse a CSV written by `emit`; returns (values, row_axis, col_axis, header)."""
    header, rows, vals = {}, [], []
    cols = None
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                kv = parse_header(line)
                if kv:
                    header[kv[0]] = kv[1]
                continue
            parts = line.split(",")
            if cols is None:
                cols = np.array([float(v) for v in parts[1:]])
                continue
            rows.append(float(parts[0]))
            vals.append([float(v) for v in parts[1:]])
    return np.array(vals), np.array(rows), cols, header


def intensities(values, log_scale=False, floor=1e-6):
    """Map values to 0..255 with a linear (or log10) ramp."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("cannot render non-finite values")
    if log_scale:
        top = v.max()
        v = np.log10(np.maximum(v, floor * top if top > 0 else floor))
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros(v.shape, dtype=np.uint8)
    return np.rint((v - lo) / (hi - lo) * 255.0).astype(np.uint8)


def to_pixmap(grid, color=False, log_scale=False, angle_offset=0.0):
    level = intensities(grid.values, log_scale)
    h, w = level.shape
    head = _header(grid, angle_offset)
    if log_scale:
        head["intensity"] = "log10"
    comments = "".join(f"# {k}: {v}\n" for k, v in head.items())
    if color:
        pos = level.astype(float) / 255.0 * (len(_RAMP) - 1)
        i = np.minimum(pos.astype(int), len(_RAMP) - 2)
        f = (pos - i)[..., None]
        rgb = np.rint(_RAMP[i] * (1.0 - f) + _RAMP[i + 1] * f).astype(np.uint8)
        return f"P6\n{comments}{w} {h}\n255\n".encode("ascii") + rgb.tobytes()
    return f"P5\n{comments}{w} {h}\n255\n".encode("ascii") + level.tobytes()


def read_pixmap(path):
    with open(path, "rb") as fh:
        data = fh.read()
    magic, rest = data[:2], data[3:]
    fields = []
    while len(fields) < 3:
        line, rest = rest.split(b"\n", 1)
        if line.startswith(b"#"):
            continue
        fields += line.split()
    w, h = int(fields[0]), int(fields[1])
    depth = 3 if magic == b"P6" else 1
    arr = np.frombuffer(rest, dtype=np.uint8, count=w * h * depth)
    return arr.reshape(h, w, depth) if depth == 3 else arr.reshape(h, w)


def emit(grid, path, fmt="csv", log_scale=False, angle_offset=0.0):
    """Write a carpet or snapshot as csv, pgm (grayscale) or ppm (colour ramp).

    angle_offset relabels the phi axis (e.g. to measure phi from Oy) and is
    recorded in the header; the values themselves are untouched.
    """
    if fmt == "csv":
        payload = to_csv(grid, angle_offset).encode("ascii")
    elif fmt in ("pgm", "ppm"):
        payload = to_pixmap(grid, fmt == "ppm", log_scale, angle_offset)
    else:
        raise InvalidArgumentError(f"unknown format {fmt!r}")
    with open(path, "wb") as fh:
        fh.write(payload)
    return path
