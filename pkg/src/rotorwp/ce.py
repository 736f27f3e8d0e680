"""Coulomb-excitation rotational packets: amplitude ingestion, a synthetic
stand-in generator and ideal-versus-realistic carpet replay.

Backscattering populates only M = 0 substates of even-I levels, so every
packet here is axially symmetric and lives in the z frame.
"""

from dataclasses import dataclass
import math

import numpy as np

from .carpets import CarpetKind, GridSpec, carpet
from .dynamics import RigidRotor, time_scales
from .errors import EmptyPacketError, FormatError, InvalidArgumentError
from .wavepacket import Frame, SHExpansion, i_bar_from_l2, parse_header

SYNTHETIC_NOTE = "synthetic Gaussian profile (not a Coulomb-excitation calculation)"


@dataclass(frozen=True)
class CEAmplitudeSet:
    entries: tuple  # ((I, amplitude), ...)
    source_note: str = ""

    def __post_init__(self):
        seen = set()
        for I, _ in self.entries:
            if I < 0 or I % 2:
                raise FormatError(f"amplitude for I={I}: only non-negative even I are allowed")
            if I in seen:
                raise FormatError(f"duplicate amplitude for I={I}")
            seen.add(I)

    def to_expansion(self):
        if not self.entries:
            raise EmptyPacketError("amplitude set is empty")
        L = max(I for I, _ in self.entries)
        c = np.zeros((L + 1, 2 * L + 1), dtype=complex)
        for I, a in self.entries:
            c[I, L] = a
        weight = float(np.sum(np.abs(c) ** 2))
        if weight == 0.0:
            raise EmptyPacketError("all amplitudes are zero")
        meta = {"symmetry": "symmetric", "source_note": self.source_note or "unspecified"}
        return SHExpansion(c / math.sqrt(weight), Frame.Z, meta)


def read_amplitudes(path):
    entries, note = [], ""
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                kv = parse_header(line)
                if kv and kv[0] == "source":
                    note = kv[1]
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise FormatError(f"{path}:{lineno}: expected 'I re [im]'")
            try:
                I = int(parts[0])
                amp = complex(float(parts[1]), float(parts[2]) if len(parts) == 3 else 0.0)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if I < 0 or I % 2:
                raise FormatError(f"{path}:{lineno}: odd or negative I={I}; only even I are populated")
            entries.append((I, amp))
    try:
        return CEAmplitudeSet(tuple(entries), note)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_amplitudes(amps, path, headers=None):
    lines = ["# rotorwp amplitude file"]
    if amps.source_note:
        lines.append(f"# source: {amps.source_note}")
    for k, v in (headers or {}).items():
        lines.append(f"# {k}: {v}")
    lines.append("# columns: I re(a) im(a)")
    for I, a in amps.entries:
        a = complex(a)
        lines.append(f"{I} {a.real!r} {a.imag!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def ingest(path):
    """Read an amplitude file into a normalised M = 0, even-I expansion."""
    return read_amplitudes(path).to_expansion()


def ibar_from_coefficients(wp):
    """Mean spin from Ibar (Ibar + 1) = <L^2> over the populated levels."""
    I = np.arange(wp.i_max + 1)
    l2 = float(np.sum(wp.weights_by_I() * I * (I + 1.0)))
    return i_bar_from_l2(l2)


def synthetic_amplitudes(center=10.0, width=3.0, i_max=None, jitter=0.0, seed=0):
    """Real, positive amplitudes on even I with Gaussian weights
    |a_I|^2 ~ exp(-(I - center)^2 / (2 width^2)).

    jitter > 0 multiplies each amplitude by (1 + jitter * u), u ~ U(-1, 1),
    drawn from a generator seeded with `seed`.
    """
    if width <= 0:
        raise InvalidArgumentError("width must be positive")
    if center < 0:
        raise InvalidArgumentError("center must be non-negative")
    if i_max is None:
        i_max = int(math.ceil(center + 6.0 * width))
    I = np.arange(0, i_max + 1, 2)
    a = np.exp(-((I - center) ** 2) / (4.0 * width ** 2))
    if jitter:
        rng = np.random.default_rng(seed)
        a = a * (1.0 + jitter * rng.uniform(-1.0, 1.0, size=a.size))
    a = np.abs(a) / math.sqrt(np.sum(a * a))
    note = f"{SYNTHETIC_NOTE}; center={center!r} width={width!r}"
    return CEAmplitudeSet(tuple((int(i), complex(v)) for i, v in zip(I, a)), note)


@dataclass(frozen=True, eq=False)
class Replay:
    ideal: object  # CarpetGrid
    real: object
    i_bar: float
    t_rev_ideal: float
    t_rev_real: float


def replay(wp, ideal, real, spec=None, workers=1):
    """Ring carpets of one packet under a rigid rotor and a realistic spectrum.

    Each carpet's time axis is in units of its own revival time; for the
    realistic spectrum that is the estimate at the packet's mean spin.
    """
    if not isinstance(ideal, RigidRotor):
        raise InvalidArgumentError("the ideal model must be a rigid rotor")
    spec = spec or GridSpec(CarpetKind.RING, t_max=1.0)
    if spec.kind is not CarpetKind.RING:
        spec = GridSpec(CarpetKind.RING, spec.t_max, spec.t_samples, spec.angle_samples, spec.t_min)
    i_bar = ibar_from_coefficients(wp)
    t_ideal = time_scales(ideal, i_bar).t_rev
    t_real = time_scales(real, i_bar).t_rev
    g_ideal = carpet(wp, ideal, spec, t_rev=t_ideal, workers=workers)
    g_real = carpet(wp, real, spec, t_rev=t_real, workers=workers)
    return Replay(g_ideal, g_real, i_bar, t_ideal, t_real)
