"""Fractional revivals of rigid-rotor wave packets.

At t = (m/n) T_rev the quadratic phase exp(-2 pi i I^2 m/n) is a periodic
function of I, so it expands over a finite grid of linear phases

    exp(-2 pi i I^2 m/n) = sum_s a_s exp(-2 pi i I * shift_s).

Each linear phase is a rigid rotation in time (a "fractional wave"); the
a_s are obtained numerically by an inverse DFT over one period.
"""

from dataclasses import dataclass
import enum
from fractions import Fraction
import math

import numpy as np
from scipy.optimize import minimize

from .dynamics import RigidRotor, TWO_PI
from .errors import InvalidArgumentError, InvalidPairError, UnsupportedModelError

AMPLITUDE_FLOOR = 1e-9


class Parity(str, enum.Enum):
    ALL = "all"
    EVEN = "even"


@dataclass(frozen=True)
class RationalTime:
    m: int
    n: int

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 1 or self.n < 1:
            raise InvalidArgumentError(f"m and n must be positive integers, got {self.m}/{self.n}")
        if math.gcd(self.m, self.n) != 1:
            raise InvalidArgumentError(f"{self.m}/{self.n} is not irreducible")

    @property
    def fraction(self):
        return Fraction(self.m, self.n)

    def __str__(self):
        return f"{self.m}/{self.n}"


@dataclass(frozen=True)
class RevivalSchedule:
    m: int
    n: int
    parity: Parity
    l: int
    q: int
    amps: tuple  # ((s, a_s), ...) non-zero terms only

    def shift(self, s):
        """Extra fraction of T_rev carried by fractional wave s."""
        return Fraction(s, self.l if self.parity is Parity.ALL else 2 * self.l)

    def effective_time(self, s):
        return Fraction(self.m, self.n) + self.shift(s)

    def home_clone_index(self):
        """Index s whose fractional wave sits exactly on the initial packet, or None."""
        period = 1 if self.parity is Parity.ALL else 2
        for s, _ in self.amps:
            if (self.effective_time(s) * period).denominator == 1:
                return s
        return None


def _grid_size(n):
    return n // 2 if n % 4 == 0 else n


def schedule(rt, parity=Parity.ALL):
    parity = Parity(parity)
    if parity is Parity.ALL:
        ratio = Fraction(rt.m, rt.n)
    else:
        # even I = 2J turns I^2 m/n into J^2 (4m/n)
        ratio = Fraction(4 * rt.m, rt.n)
    mm, nn = ratio.numerator, ratio.denominator
    l = _grid_size(nn)
    J = np.arange(l)
    residue = (J * J * mm) % nn
    g = np.exp(-2j * np.pi * residue / nn)
    a = np.fft.ifft(g)
    amps = tuple((int(s), complex(a[s])) for s in range(l) if abs(a[s]) > AMPLITUDE_FLOOR)
    return RevivalSchedule(rt.m, rt.n, parity, l, len(amps), amps)


def predicted_q(rt, parity=Parity.ALL):
    """Fractional-wave count from the closed-form case analysis."""
    n = rt.n
    if Parity(parity) is Parity.ALL or n % 2 == 1:
        return n // 2 if n % 2 == 0 else n
    if n % 4 == 0:
        n1 = n // 4
        return n1 if n1 % 2 == 1 else n1 // 2
    return n // 2


def infer_parity(wp):
    return Parity.EVEN if not np.any(wp.coeffs[1::2]) else Parity.ALL


@dataclass(frozen=True)
class FractionalWave:
    s: int
    amplitude: complex
    tau: Fraction  # effective time in units of T_rev
    t: float
    expansion: object


def _linear_phase(wp, tau):
    I = np.arange(wp.i_max + 1)
    residue = (I * tau.numerator) % tau.denominator
    return wp.replace(wp.coeffs * np.exp(-2j * np.pi * residue / tau.denominator)[:, None])


def fractional_waves(wp, rt, model, parity=None):
    """Fractional waves Psi_cl^(s) at their effective times t_s.

    sum_s a_s Psi_cl^(s) reproduces the packet evolved to (m/n) T_rev.
    """
    if not isinstance(model, RigidRotor):
        raise UnsupportedModelError("fractional-wave decomposition is exact only for a rigid rotor")
    sched = schedule(rt, infer_parity(wp) if parity is None else parity)
    t_rev = TWO_PI / model.omega0
    out = []
    for s, a in sched.amps:
        tau = sched.effective_time(s)
        out.append(FractionalWave(s, a, tau, float(tau) * t_rev, _linear_phase(wp, tau)))
    return out


def reconstruct(waves):
    total = sum(w.amplitude * np.asarray(w.expansion.coeffs) for w in waves)
    return waves[0].expansion.replace(total)


def farey_windows(n_max=24, upper=Fraction(1, 2)):
    """All irreducible m/n in (0, upper] with n <= n_max, ascending."""
    out = {Fraction(m, n) for n in range(1, n_max + 1) for m in range(1, n + 1)
           if math.gcd(m, n) == 1 and Fraction(m, n) <= upper}
    return [RationalTime(f.numerator, f.denominator) for f in sorted(out)]


def format_schedule(schedules):
    lines = ["# columns: m n parity l q s re(a_s) im(a_s)"]
    for sc in schedules:
        for s, a in sc.amps:
            lines.append(f"{sc.m} {sc.n} {sc.parity.value} {sc.l} {sc.q} {s} {a.real!r} {a.imag!r}")
    return "\n".join(lines) + "\n"


class CloneClass(str, enum.Enum):
    CLONES = "clones"
    MUTANTS = "mutants"
    MIXED = "mixed"


@dataclass(frozen=True)
class CloneReport:
    peaks: list  # [(phi0, overlap)], overlaps descending
    classification: CloneClass
    q_observed: int
    captured_weight: float
    fitted_angles: list


CLONE_MISMATCH = 1e-3


def _rotation_period(wp):
    ms = {abs(M) for (_, M), _ in wp.items() if M != 0}
    p = 0
    for M in ms:
        p = math.gcd(p, M)
    return p


def _wrap(phi, span):
    phi = (phi + 0.5 * span) % span - 0.5 * span
    return 0.0 if abs(phi) < 1e-12 else float(phi)


def _fit_rotated_copies(wp0, wpt, angles):
    """Best least-squares fit of Psi_t by rotated copies of Psi0.

    The scan maxima are shifted by interference between neighbouring
    copies, so the angles are polished by maximising the captured weight.
    """
    if not angles:
        return [], 0.0
    M = wp0.m_values
    target = wpt.coeffs.ravel()

    def captured(phis):
        V = np.stack([(wp0.coeffs * np.exp(1j * M * phi)[None, :]).ravel() for phi in phis], axis=1)
        coef, *_ = np.linalg.lstsq(V, target, rcond=None)
        return float(np.linalg.norm(V @ coef) ** 2)

    start = np.array(angles, dtype=float)
    res = minimize(lambda x: -captured(x), start, method="BFGS", options={"gtol": 1e-10})
    best = res.x if -res.fun > captured(start) else start
    return [float(a) for a in best], min(captured(best), 1.0)


def clone_scan(wp0, wpt, samples=2048):
    """Scan C(phi0) = |<R(phi0) Psi0 | Psi_t>|^2 for rotated copies of Psi0.

    R(phi0) maps Psi(theta, phi) to Psi(theta, phi + phi0).  When the
    initial packet is itself invariant under rotations by 2 pi / p, angles
    are reported modulo 2 pi / p in [-pi / p, pi / p).
    """
    if wp0.i_max != wpt.i_max or wp0.frame != wpt.frame:
        raise InvalidPairError("packets must share truncation bound and frame")
    for wp in (wp0, wpt):
        if abs(wp.norm() - 1.0) > 1e-8:
            raise InvalidPairError(f"packet norm {wp.norm():.12g} is not 1")
    L = wp0.i_max
    c = np.sum(np.conj(wp0.coeffs) * wpt.coeffs, axis=0)  # indexed by M + L
    M_all = np.arange(-L, L + 1)
    p = _rotation_period(wp0)

    def overlap(phi0):
        return float(abs(np.sum(c * np.exp(-1j * M_all * phi0))) ** 2)

    if p == 0:
        C0 = overlap(0.0)
        peaks = [(0.0, min(C0, 1.0))]
        q = 1 if C0 >= 0.5 else 0
    else:
        K = max(samples, 2 * (2 * L // p + 1))
        span = TWO_PI / p
        spectrum = np.zeros(K, dtype=complex)
        for M, cm in zip(M_all, c):
            if cm != 0:
                spectrum[(M // p) % K] += cm
        C = np.abs(np.fft.fft(spectrum)) ** 2
        left, right = np.roll(C, 1), np.roll(C, -1)
        idx = np.nonzero((C > left) & (C >= right))[0]
        h = span / K
        cands = []
        for k in idx:
            denom = left[k] - 2.0 * C[k] + right[k]
            delta = 0.5 * (left[k] - right[k]) / denom if denom < 0 else 0.0
            phi0 = _wrap((k + delta) * h, span)
            cands.append((phi0, min(max(overlap(phi0), C[k]), 1.0)))
        cands.sort(key=lambda pc: (-pc[1], pc[0]))
        q = 0
        for k, (_, ck) in enumerate(cands, 1):
            if ck >= 0.5 / k:
                q = k
        peaks = cands[:q]

    fitted, captured = _fit_rotated_copies(wp0, wpt, [phi0 for phi0, _ in peaks])
    if q and 1.0 - captured < CLONE_MISMATCH:
        cls = CloneClass.CLONES
    elif q == 0 or captured < 0.5:
        cls = CloneClass.MUTANTS
    else:
        cls = CloneClass.MIXED
    return CloneReport(peaks, cls, q, captured, fitted)
