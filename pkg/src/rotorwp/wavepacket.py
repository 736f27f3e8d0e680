"""Squeezed rotational wave packets expanded in spherical harmonics.

The exponential coherent packet

    Psi_eta(theta, phi) = sqrt(2N / (4 pi sinh 2N)) exp(N sin(theta) (cos(phi) + i eta sin(phi)))

points along +x.  Its coefficients b_IM are produced by the finite double
sum over (l, l') of stretched-state couplings; the eta = 0 (linear) packet
is also available in the frame where its axis is z, where only M = 0
survives and b_I0 is a modified spherical Bessel function.
"""

from dataclasses import dataclass, field
import enum
import math

import numpy as np
from scipy.special import gammaln

from .angular import cg_stretched, cg_zero_projection, log_mod_sph_bessel_i
from .errors import FormatError, InvalidArgumentError, TruncationError

STORAGE_FLOOR = 1e-16
_LOG_TINY = math.log(1e-22)


class Symmetry(str, enum.Enum):
    ASYMMETRIC = "asymmetric"
    SYMMETRIC = "symmetric"


class Frame(str, enum.Enum):
    """Which axis the packet's symmetry axis is aligned with."""

    X = "x"
    Z = "z"


@dataclass(frozen=True)
class TruncationPolicy:
    eps: float = 1e-12
    i_cap: int | None = None

    def cap_for(self, n):
        if self.i_cap is not None:
            return int(self.i_cap)
        return int(math.ceil(4 * n)) + 40


@dataclass(frozen=True)
class WavePacketSpec:
    N: float
    eta: float
    symmetry: Symmetry = Symmetry.ASYMMETRIC
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)

    def __post_init__(self):
        if not self.N > 0:
            raise InvalidArgumentError(f"N must be positive, got {self.N}")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidArgumentError(f"eta must lie in [0, 1], got {self.eta}")
        object.__setattr__(self, "symmetry", Symmetry(self.symmetry))


@dataclass(frozen=True, eq=False)
class SHExpansion:
    """Coefficients b_IM stored densely as coeffs[I, M + i_max].

    Instances are immutable; the coefficient array is read-only.
    """

    coeffs: np.ndarray
    frame: Frame = Frame.X
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] != 2 * c.shape[0] - 1:
            raise InvalidArgumentError(f"bad coefficient array shape {c.shape}")
        L = c.shape[0] - 1
        I = np.arange(L + 1)[:, None]
        M = np.arange(-L, L + 1)[None, :]
        c[(np.abs(M) > I) | (np.abs(c) < STORAGE_FLOOR)] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "frame", Frame(self.frame))
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def from_items(cls, items, frame=Frame.X, meta=None, i_max=None):
        items = list(items)
        if i_max is None:
            i_max = max((I for (I, _), _ in items), default=0)
        c = np.zeros((i_max + 1, 2 * i_max + 1), dtype=complex)
        for (I, M), v in items:
            if I < 0 or abs(M) > I or I > i_max:
                raise InvalidArgumentError(f"invalid index (I={I}, M={M})")
            c[I, M + i_max] += v
        return cls(c, frame, meta or {})

    @property
    def i_max(self):
        return self.coeffs.shape[0] - 1

    @property
    def m_values(self):
        return np.arange(-self.i_max, self.i_max + 1)

    def get(self, I, M):
        if I > self.i_max or abs(M) > I:
            return 0j
        return complex(self.coeffs[I, M + self.i_max])

    def items(self):
        """Non-zero ((I, M), b) pairs ordered by I then M."""
        L = self.i_max
        for I, j in zip(*np.nonzero(self.coeffs)):
            yield (int(I), int(j) - L), complex(self.coeffs[I, j])

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def weights_by_I(self):
        return np.sum(np.abs(self.coeffs) ** 2, axis=1)

    def replace(self, coeffs, **meta_updates):
        meta = dict(self.meta)
        meta.update(meta_updates)
        return SHExpansion(coeffs, self.frame, meta)

    def normalized(self):
        return self.replace(self.coeffs / self.norm())

    def resized(self, i_max):
        """Same state with the storage bound changed to i_max (truncating if smaller)."""
        L = self.i_max
        c = np.zeros((i_max + 1, 2 * i_max + 1), dtype=complex)
        k = min(L, i_max)
        c[: k + 1, i_max - k : i_max + k + 1] = self.coeffs[: k + 1, L - k : L + k + 1]
        return self.replace(c)

    def distance(self, other):
        """Coefficient-space L2 distance."""
        L = max(self.i_max, other.i_max)
        return float(np.linalg.norm(self.resized(L).coeffs - other.resized(L).coeffs))


def shift_phi(wp, alpha):
    """Expansion of Psi(theta, phi + alpha): b_IM -> b_IM exp(i M alpha)."""
    return wp.replace(wp.coeffs * np.exp(1j * wp.m_values * alpha)[None, :])


def _log_sinh(y):
    if y < 20.0:
        return math.log(math.sinh(y))
    return y - math.log(2.0) + math.log1p(-math.exp(-2.0 * y))


def _truncate(coeffs, eps, cap):
    weight = np.cumsum(np.sum(np.abs(coeffs) ** 2, axis=1))
    hit = np.nonzero(weight >= 1.0 - eps)[0]
    if hit.size == 0:
        raise TruncationError(weight[-1], cap)
    i_max = int(hit[0])
    c = coeffs[: i_max + 1, cap - i_max : cap + i_max + 1]
    return c / np.sqrt(np.sum(np.abs(c) ** 2))


def _pair_log_sizes(n, eta, l_max):
    l = np.arange(l_max + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = l * math.log(n * (1.0 + eta)) - 0.5 * gammaln(2 * l + 1)
        log_b = math.log(n * (1.0 - eta)) if eta < 1.0 else -np.inf
        v = np.where(l == 0, 0.0, l * log_b) - 0.5 * gammaln(2 * l + 1)
    return u, v


def coherent_coefficients(N, eta, i_cap):
    """Raw double-sum coefficients b_IM for I <= i_cap, before any truncation.

    Returns a dense array indexed [I, M + i_cap].
    """
    N, eta = float(N), float(eta)
    log_pref = 0.5 * (math.log(2 * N) - _log_sinh(2 * N))

    # each pair (l, l') contributes a term of size ~ exp(u_l + v_l' + log_pref)
    l_max = i_cap + int(4 * N) + 40
    u, v = _pair_log_sizes(N, eta, l_max)
    keep = (u[:, None] + v[None, :] + log_pref) > _LOG_TINY
    lp_grid, l_grid = np.meshgrid(np.arange(l_max + 1), np.arange(l_max + 1))
    keep &= np.abs(l_grid - lp_grid) <= i_cap
    l_pair, lp_pair = l_grid[keep], lp_grid[keep]

    i_lo = np.abs(l_pair - lp_pair)
    i_hi = np.minimum(l_pair + lp_pair, i_cap)
    counts = np.maximum((i_hi - i_lo) // 2 + 1, 0)
    rep = np.repeat(np.arange(l_pair.size), counts)
    offset = np.arange(rep.size) - np.repeat(np.cumsum(counts) - counts, counts)
    l, lp = l_pair[rep], lp_pair[rep]
    I = i_lo[rep] + 2 * offset

    # (-1)^l: with Condon-Shortley harmonics the packet then points along +x
    sign = np.where(l % 2 == 0, 1.0, -1.0)
    mag = np.exp(u[l] + v[lp] + log_pref)
    terms = sign * mag * cg_zero_projection(l, lp, I) * cg_stretched(l, lp, I) / np.sqrt(2 * I + 1)

    full = np.zeros((i_cap + 1, 2 * i_cap + 1), dtype=complex)
    np.add.at(full, (I, l - lp + i_cap), terms)
    return full


def build_asymmetric(spec):
    cap = spec.truncation.cap_for(spec.N)
    c = _truncate(coherent_coefficients(spec.N, spec.eta, cap), spec.truncation.eps, cap)
    meta = {"N": float(spec.N), "eta": float(spec.eta), "symmetry": Symmetry.ASYMMETRIC.value}
    return SHExpansion(c, Frame.X, meta)


def build_linear(N, truncation=None):
    """eta = 0 packet in the frame where its symmetry axis is z."""
    if not N > 0:
        raise InvalidArgumentError(f"N must be positive, got {N}")
    truncation = truncation or TruncationPolicy()
    N = float(N)
    cap = truncation.cap_for(N)
    I = np.arange(cap + 1)
    log_b = (0.5 * (math.log(2 * N) - _log_sinh(2 * N)) + 0.5 * np.log(2 * I + 1)
             + log_mod_sph_bessel_i(cap, N))
    full = np.zeros((cap + 1, 2 * cap + 1), dtype=complex)
    full[:, cap] = np.exp(log_b)
    c = _truncate(full, truncation.eps, cap)
    meta = {"N": N, "eta": 0.0, "symmetry": Symmetry.ASYMMETRIC.value}
    return SHExpansion(c, Frame.Z, meta)


def symmetric_factor(N, eta):
    """Ratio b_IM+ / b_IM for even I, using the exact normalisation C+."""
    interference = (2.0 * N) * float(np.sinc(2.0 * eta * N / math.pi)) * math.exp(-_log_sinh(2.0 * N))
    return math.sqrt(2.0 / (1.0 + interference))


def symmetrize(asym, spec):
    for key, val in (("N", spec.N), ("eta", spec.eta)):
        if key in asym.meta and not math.isclose(float(asym.meta[key]), float(val), rel_tol=1e-12):
            raise InvalidArgumentError(f"expansion was built with {key}={asym.meta[key]}, not {val}")
    c = np.array(asym.coeffs)
    c[1::2, :] = 0.0
    c *= symmetric_factor(spec.N, spec.eta)
    c /= np.sqrt(np.sum(np.abs(c) ** 2))
    return asym.replace(c, symmetry=Symmetry.SYMMETRIC.value)


def build(spec):
    asym = build_asymmetric(spec)
    if spec.symmetry is Symmetry.SYMMETRIC:
        return symmetrize(asym, spec)
    return asym


@dataclass(frozen=True)
class Observables:
    Lx: float
    Ly: float
    Lz: float
    var_Lx: float
    var_Ly: float
    L2: float
    i_bar: float


def _ladder(wp):
    """Return (L+ psi, L- psi, Lz psi) on the same dense grid."""
    b = wp.coeffs
    L = wp.i_max
    I = np.arange(L + 1)[:, None].astype(float)
    M = wp.m_values[None, :].astype(float)
    up = np.sqrt(np.clip(I * (I + 1) - M * (M + 1), 0.0, None)) * b
    down = np.sqrt(np.clip(I * (I + 1) - M * (M - 1), 0.0, None)) * b
    lp = np.zeros_like(b)
    lm = np.zeros_like(b)
    lp[:, 1:] = up[:, :-1]
    lm[:, :-1] = down[:, 1:]
    return lp, lm, M * b


def i_bar_from_l2(l2):
    return 0.5 * (math.sqrt(1.0 + 4.0 * l2) - 1.0)


def observables(wp):
    b = wp.coeffs
    n2 = float(np.sum(np.abs(b) ** 2))
    lp, lm, lz = _ladder(wp)
    lx = 0.5 * (lp + lm)
    ly = -0.5j * (lp - lm)
    ex = np.vdot(b, lx).real / n2
    ey = np.vdot(b, ly).real / n2
    ez = np.vdot(b, lz).real / n2
    vx = float(np.sum(np.abs(lx) ** 2)) / n2 - ex * ex
    vy = float(np.sum(np.abs(ly) ** 2)) / n2 - ey * ey
    I = np.arange(wp.i_max + 1)
    l2 = float(np.sum(I * (I + 1) * wp.weights_by_I())) / n2
    return Observables(float(ex), float(ey), float(ez), max(float(vx), 0.0), max(float(vy), 0.0),
                       l2, i_bar_from_l2(l2))


def intelligent_residual(wp, eta):
    """||(Lx + i eta Ly) Psi|| evaluated with ladder operators.

    Meaningful for packets stored with their symmetry axis along x.
    """
    lp, lm, _ = _ladder(wp)
    out = 0.5 * (1.0 + eta) * lp + 0.5 * (1.0 - eta) * lm
    return float(np.sqrt(np.sum(np.abs(out) ** 2)))


_META_ORDER = ("N", "eta", "symmetry", "frame", "i_max")


def write_coefficients(wp, path, headers=None):
    lines = ["# rotorwp coefficient file"]
    meta = dict(wp.meta)
    meta["frame"] = wp.frame.value
    meta["i_max"] = wp.i_max
    if headers:
        meta.update(headers)
    keys = [k for k in _META_ORDER if k in meta] + sorted(k for k in meta if k not in _META_ORDER)
    for k in keys:
        lines.append(f"# {k}: {meta[k]}")
    lines.append("# columns: I M re(b) im(b)")
    for (I, M), v in wp.items():
        lines.append(f"{I} {M} {float(v.real)!r} {float(v.imag)!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_header(line):
    body = line.lstrip("#").strip()
    if ":" not in body:
        return None
    key, _, val = body.partition(":")
    return key.strip(), val.strip()


def read_coefficients(path):
    meta = {}
    items = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                kv = parse_header(line)
                if kv and kv[0] != "columns":
                    meta[kv[0]] = kv[1]
                continue
            parts = line.split()
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: expected 'I M re im'")
            try:
                I, M = int(parts[0]), int(parts[1])
                v = complex(float(parts[2]), float(parts[3]))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if I < 0 or abs(M) > I:
                raise FormatError(f"{path}:{lineno}: invalid index (I={I}, M={M})")
            items.append(((I, M), v))
    frame = Frame(meta.pop("frame", "x"))
    i_max = meta.pop("i_max", None)
    i_max = int(i_max) if i_max is not None else None
    for key in ("N", "eta"):
        if key in meta:
            meta[key] = float(meta[key])
    return SHExpansion.from_items(items, frame, meta, i_max=i_max)
