"""Command-line front end: build -> evolve -> analyse -> emit.

Every command writes its artifacts plus a `<stem>.config.json` echo (stem of
--out) into --out-dir.  Artifacts carry the tool version and a hash of the echoed
configuration.  The worker count only changes how the work is scheduled,
so it is left out of both and outputs stay byte-identical across it.

Exit codes: 0 success, 1 domain error, 2 usage error, 3 I/O error.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__, bundled_levels_path
from . import carpets, ce, dynamics, revivals, wavepacket
from .errors import RotorError

FORMAT_VERSIONS = (1,)
EXIT_DOMAIN, EXIT_USAGE, EXIT_IO = 1, 2, 3


class UsageError(Exception):
    pass


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Resolved configuration of one invocation and its provenance."""

    def __init__(self, args, input_keys):
        self.out_dir = os.path.abspath(args.out_dir)
        self.workers = args.workers
        cfg = {"command": args.command, "format_version": args.format_version, "seed": args.seed}
        inputs = {}
        for key, val in sorted(vars(args).items()):
            if key in ("command", "func", "out_dir", "workers", "format_version", "seed"):
                continue
            if key in input_keys and val is not None:
                path = os.path.abspath(str(val))
                inputs[key] = {"name": os.path.basename(path), "sha256": _sha256(path)}
                setattr(args, key, path)
            else:
                cfg[key] = list(val) if isinstance(val, (list, tuple)) else val
        cfg["inputs"] = inputs
        self.config = cfg
        self.config_json = json.dumps(cfg, sort_keys=True, indent=2) + "\n"
        self.config_hash = hashlib.sha256(self.config_json.encode()).hexdigest()[:16]
        self.outputs = []

    @property
    def provenance(self):
        return {"tool": f"rotorwp {__version__}", "config-hash": self.config_hash}

    def path(self, name):
        if os.path.basename(name) != name:
            raise UsageError(f"output name {name!r} must be a bare file name")
        self.outputs.append(name)
        return os.path.join(self.out_dir, name)

    def write_text(self, name, text):
        with open(self.path(name), "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)

    def finish(self):
        echo = dict(self.config, outputs=sorted(self.outputs))
        name = f"{os.path.splitext(self.config['out'])[0]}.config.json"
        with open(os.path.join(self.out_dir, name), "w", encoding="ascii", newline="\n") as fh:
            fh.write(json.dumps(echo, sort_keys=True, indent=2) + "\n")
        for out in sorted(self.outputs):
            print(os.path.join(self.out_dir, out))


def _header_lines(title, headers):
    return [f"# {title}"] + [f"# {k}: {v}" for k, v in headers.items()]


# -- shared argument groups ---------------------------------------------------

def _add_model_args(p, default="rigid"):
    g = p.add_argument_group("energy model")
    g.add_argument("--model", choices=["rigid", "polynomial", "levels"], default=default)
    g.add_argument("--omega0", type=float, default=1.0, help="rigid-rotor E = omega0 I(I+1)")
    g.add_argument("--a", type=float, help="polynomial coefficient of I(I+1)")
    g.add_argument("--b", type=float, default=0.0, help="polynomial coefficient of [I(I+1)]^2")
    g.add_argument("--levels", help="level file ('I energy' lines)")


def _model(args):
    if args.model == "rigid":
        return dynamics.RigidRotor(args.omega0)
    if args.model == "polynomial":
        if args.a is None:
            raise UsageError("--model polynomial needs --a")
        return dynamics.Polynomial(args.a, args.b)
    if args.levels is None:
        raise UsageError("--model levels needs --levels")
    return dynamics.read_levels(args.levels)


def _t_rev(wp, model):
    return carpets.carpet_t_rev(wp, model)


def _parse_fraction(text):
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a rational number: {text!r}") from None
    if f <= 0:
        raise UsageError("fraction must be positive")
    return revivals.RationalTime(f.numerator, f.denominator)


def _formats(text):
    fmts = sorted(set(text.split(",")))
    bad = [f for f in fmts if f not in ("csv", "pgm", "ppm")]
    if bad:
        raise UsageError(f"unknown format(s): {', '.join(bad)}")
    return fmts


def _emit_grid(run, grid, stem, fmts, log_scale, angle_offset=0.0):
    meta = dict(run.provenance)
    meta.update(grid.meta)
    grid = dataclasses.replace(grid, meta=meta)
    for fmt in fmts:
        carpets.emit(grid, run.path(f"{stem}.{fmt}"), fmt, log_scale=log_scale, angle_offset=angle_offset)


# -- commands -----------------------------------------------------------------

def cmd_build(args, run):
    policy = wavepacket.TruncationPolicy(args.eps, args.i_cap)
    sym = wavepacket.Symmetry.SYMMETRIC if args.symmetric else wavepacket.Symmetry.ASYMMETRIC
    spec = wavepacket.WavePacketSpec(args.n, args.eta, sym, policy)
    frame = args.frame or ("z" if args.eta == 0 else "x")
    if frame == "z":
        if args.eta != 0:
            raise UsageError("--frame z is only available for eta = 0")
        wp = wavepacket.build_linear(args.n, policy)
        if args.symmetric:
            wp = wavepacket.symmetrize(wp, spec)
    else:
        wp = wavepacket.build(spec)
    wavepacket.write_coefficients(wp, run.path(args.out), run.provenance)


def cmd_observe(args, run):
    wp = wavepacket.read_coefficients(args.input)
    obs = wavepacket.observables(wp)
    lines = _header_lines("rotorwp observables", run.provenance)
    lines.append(f"frame: {wp.frame.value}")
    lines.append(f"i_max: {wp.i_max}")
    lines.append(f"norm: {wp.norm()!r}")
    for f in dataclasses.fields(obs):
        lines.append(f"{f.name}: {float(getattr(obs, f.name))!r}")
    if "eta" in wp.meta and wp.frame is wavepacket.Frame.X:
        lines.append(f"intelligent_residual: {wavepacket.intelligent_residual(wp, wp.meta['eta'])!r}")
    ts = dynamics.time_scales(dynamics.RigidRotor(1.0), obs.i_bar)
    lines.append(f"t_cl_over_t_rev: {ts.t_cl / ts.t_rev!r}")
    run.write_text(args.out, "\n".join(lines) + "\n")


def cmd_evolve(args, run):
    wp = wavepacket.read_coefficients(args.input)
    model = _model(args)
    t = args.t if args.absolute else args.t * _t_rev(wp, model)
    out = dynamics.evolve(wp, model, t)
    headers = dict(run.provenance, time=repr(float(t)))
    if not args.absolute:
        headers["tau"] = repr(float(args.t))
    wavepacket.write_coefficients(out, run.path(args.out), headers)


def cmd_schedule(args, run):
    parities = [revivals.Parity(p) for p in (["all", "even"] if args.parity == "both" else [args.parity])]
    if args.farey is not None:
        times = revivals.farey_windows(args.farey)
    else:
        if args.m is None or args.n is None:
            raise UsageError("give --m and --n, or --farey")
        times = [revivals.RationalTime(args.m, args.n)]
    scheds = [revivals.schedule(rt, par) for rt in times for par in parities]
    text = "\n".join(_header_lines("rotorwp revival schedule", run.provenance)) + "\n"
    run.write_text(args.out, text + revivals.format_schedule(scheds))


def cmd_fractions(args, run):
    wp = wavepacket.read_coefficients(args.input)
    if args.model != "rigid":
        raise UsageError("fractional waves need --model rigid")
    model = _model(args)
    rt = _parse_fraction(args.at)
    waves = revivals.fractional_waves(wp, rt, model)
    exact = dynamics.evolve(wp, model, float(rt.fraction) * _t_rev(wp, model))
    err = revivals.reconstruct(waves).distance(exact)
    report = revivals.clone_scan(wp, exact)
    lines = _header_lines("rotorwp fractional waves", run.provenance)
    lines.append(f"# at: {rt}")
    lines.append(f"# parity: {revivals.infer_parity(wp).value}")
    lines.append(f"# reconstruction_error: {err!r}")
    lines.append(f"# classification: {report.classification.value}")
    lines.append(f"# q_observed: {report.q_observed}")
    lines.append(f"# captured_weight: {report.captured_weight!r}")
    lines.append("# columns: s tau re(a_s) im(a_s)")
    for w in waves:
        lines.append(f"{w.s} {w.tau} {w.amplitude.real!r} {w.amplitude.imag!r}")
    lines.append("# clone peaks: phi0 overlap fitted_phi0")
    for (phi0, c), fit in zip(report.peaks, report.fitted_angles):
        lines.append(f"# peak {phi0!r} {c!r} {fit!r}")
    run.write_text(args.out, "\n".join(lines) + "\n")
    if args.write_waves:
        stem = os.path.splitext(args.out)[0]
        for w in waves:
            headers = dict(run.provenance, tau=str(w.tau), amplitude=repr(w.amplitude))
            wavepacket.write_coefficients(w.expansion, run.path(f"{stem}.s{w.s}.txt"), headers)


def cmd_carpet(args, run):
    wp = wavepacket.read_coefficients(args.input)
    model = _model(args)
    spec = carpets.GridSpec(args.theta_cut, args.t_max, args.t_samples, args.angle_samples, args.t_min)
    grid = carpets.carpet(wp, model, spec, workers=run.workers)
    _emit_grid(run, grid, args.out, _formats(args.format), args.log)


def cmd_snapshot(args, run):
    wp = wavepacket.read_coefficients(args.input)
    model = _model(args)
    snap = carpets.snapshot(wp, model, args.tau, args.theta_samples, args.phi_samples)
    _emit_grid(run, snap, args.out, _formats(args.format), args.log, args.angle_offset)


def cmd_ce_ingest(args, run):
    if args.synthetic:
        amps = ce.synthetic_amplitudes(args.center, args.width, args.i_max, args.jitter, args.seed)
        ce.write_amplitudes(amps, run.path(f"{args.out}.amplitudes.txt"), run.provenance)
    elif args.input:
        amps = ce.read_amplitudes(args.input)
        if args.source:
            amps = dataclasses.replace(amps, source_note=args.source)
    else:
        raise UsageError("give --input or --synthetic")
    wp = amps.to_expansion()
    headers = dict(run.provenance, i_bar=repr(ce.ibar_from_coefficients(wp)))
    wavepacket.write_coefficients(wp, run.path(f"{args.out}.txt"), headers)


def cmd_fit_levels(args, run):
    path = args.levels or str(bundled_levels_path())
    fit = dynamics.fit_polynomial(dynamics.read_levels(path))
    run.write_text(args.out, dynamics.format_fit_report(fit, run.provenance))


def cmd_replay(args, run):
    wp = wavepacket.read_coefficients(args.input)
    if args.levels:
        real = dynamics.read_levels(args.levels)
    elif args.a is not None:
        real = dynamics.Polynomial(args.a, args.b)
    else:
        real = dynamics.read_levels(str(bundled_levels_path()))
    if args.omega0 is not None:
        omega0 = args.omega0
    elif isinstance(real, dynamics.Polynomial):
        omega0 = real.a
    else:
        omega0 = dynamics.fit_polynomial(real).model.a
    ideal = dynamics.RigidRotor(omega0)
    spec = carpets.GridSpec(carpets.CarpetKind.RING, args.t_max, args.t_samples, args.angle_samples, args.t_min)
    result = ce.replay(wp, ideal, real, spec, workers=run.workers)
    fmts = _formats(args.format)
    for tag, grid, t_rev in (("ideal", result.ideal, result.t_rev_ideal), ("real", result.real, result.t_rev_real)):
        grid = dataclasses.replace(grid, meta=dict(grid.meta, model=tag, i_bar=repr(result.i_bar)))
        _emit_grid(run, grid, f"{args.out}.{tag}", fmts, args.log)
    dev_ideal = float(np.max(np.abs(result.ideal.column(1.0) - result.ideal.column(0.0))))
    dev_real = float(np.max(np.abs(result.real.column(1.0) - result.real.column(0.0))))
    lines = _header_lines("rotorwp replay summary", run.provenance)
    lines += [
        f"i_bar: {result.i_bar!r}",
        f"omega0_ideal: {omega0!r}",
        f"t_rev_ideal: {result.t_rev_ideal!r}",
        f"t_rev_estimated: {result.t_rev_real!r}",
    ]
    if args.t_min <= 0.0 <= 1.0 <= args.t_max:
        lines += [f"revival_deviation_ideal: {dev_ideal!r}", f"revival_deviation_real: {dev_real!r}"]
    run.write_text(f"{args.out}.summary.txt", "\n".join(lines) + "\n")


# -- parser -------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _carpet_grid_args(p, t_max):
    p.add_argument("--t-min", type=float, default=0.0, help="start time in units of T_rev")
    p.add_argument("--t-max", type=float, default=t_max, help="end time in units of T_rev")
    p.add_argument("--t-samples", type=int, default=256)
    p.add_argument("--angle-samples", type=int, default=256)
    p.add_argument("--format", default="csv", help="comma list of csv, pgm, ppm")
    p.add_argument("--log", action="store_true", help="log-scaled image intensity")


def build_parser():
    p = argparse.ArgumentParser(prog="rotorwp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rotorwp {__version__}")
    p.add_argument("--out-dir", default=".", help="directory for all artifacts")
    p.add_argument("--format-version", type=int, default=1, choices=FORMAT_VERSIONS)
    p.add_argument("--workers", type=_positive_int, default=1, help="threads for grid evaluation")
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic generators")
    sub = p.add_subparsers(dest="command", required=True)
    inputs = {}

    s = sub.add_parser("build", help="build a coherent wave packet")
    s.add_argument("--n", type=float, required=True, help="coherence parameter N")
    s.add_argument("--eta", type=float, default=1.0, help="squeezing parameter in [0, 1]")
    s.add_argument("--symmetric", action="store_true", help="antipodal (even-I) superposition")
    s.add_argument("--frame", choices=["x", "z"], help="quantisation axis (default z when eta = 0)")
    s.add_argument("--eps", type=float, default=1e-12, help="discarded-weight tolerance")
    s.add_argument("--i-cap", type=int, help="hard upper bound on I")
    s.add_argument("--out", default="packet.txt")
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("observe", help="angular-momentum moments of a packet")
    s.add_argument("--input", required=True)
    s.add_argument("--out", default="observables.txt")
    s.set_defaults(func=cmd_observe)
    inputs["observe"] = {"input"}

    s = sub.add_parser("evolve", help="propagate a packet in time")
    s.add_argument("--input", required=True)
    s.add_argument("--t", type=float, required=True, help="time in units of T_rev")
    s.add_argument("--absolute", action="store_true", help="read --t in internal units (hbar / energy unit)")
    _add_model_args(s)
    s.add_argument("--out", default="evolved.txt")
    s.set_defaults(func=cmd_evolve)
    inputs["evolve"] = {"input", "levels"}

    s = sub.add_parser("schedule", help="Gauss-sum fractional-revival amplitudes")
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--farey", type=int, metavar="NMAX", help="all m/n <= 1/2 with n <= NMAX")
    s.add_argument("--parity", choices=["all", "even", "both"], default="all")
    s.add_argument("--out", default="schedule.txt")
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("fractions", help="fractional waves and clone analysis at m/n T_rev")
    s.add_argument("--input", required=True)
    s.add_argument("--at", required=True, help="m/n, e.g. 1/16")
    s.add_argument("--write-waves", action="store_true", help="also write each fractional wave")
    _add_model_args(s)
    s.add_argument("--out", default="fractions.txt")
    s.set_defaults(func=cmd_fractions)
    inputs["fractions"] = {"input", "levels"}

    s = sub.add_parser("carpet", help="density over one angle and time")
    s.add_argument("--input", required=True)
    s.add_argument("--theta-cut", choices=["equatorial", "ring"], default="equatorial")
    _carpet_grid_args(s, 0.5)
    _add_model_args(s)
    s.add_argument("--out", default="carpet", help="output stem")
    s.set_defaults(func=cmd_carpet)
    inputs["carpet"] = {"input", "levels"}

    s = sub.add_parser("snapshot", help="density over the sphere at one time")
    s.add_argument("--input", required=True)
    s.add_argument("--tau", type=float, default=0.0, help="time in units of T_rev")
    s.add_argument("--theta-samples", type=int, default=128)
    s.add_argument("--phi-samples", type=int, default=256)
    s.add_argument("--angle-offset", type=float, default=0.0, help="added to the phi axis labels")
    s.add_argument("--format", default="csv")
    s.add_argument("--log", action="store_true")
    _add_model_args(s)
    s.add_argument("--out", default="snapshot", help="output stem")
    s.set_defaults(func=cmd_snapshot)
    inputs["snapshot"] = {"input", "levels"}

    s = sub.add_parser("ce-ingest", help="Coulomb-excitation amplitudes to a packet")
    s.add_argument("--input", help="amplitude file ('I re im' lines)")
    s.add_argument("--source", help="override the source note")
    s.add_argument("--synthetic", action="store_true", help="generate a labelled synthetic profile")
    s.add_argument("--center", type=float, default=10.0)
    s.add_argument("--width", type=float, default=3.0)
    s.add_argument("--i-max", type=int)
    s.add_argument("--jitter", type=float, default=0.0, help="relative amplitude noise (uses --seed)")
    s.add_argument("--out", default="ce_packet", help="output stem")
    s.set_defaults(func=cmd_ce_ingest)
    inputs["ce-ingest"] = {"input"}

    s = sub.add_parser("fit-levels", help="fit E = a I(I+1) + b [I(I+1)]^2")
    s.add_argument("--levels", help="level file (default: bundled 238U band)")
    s.add_argument("--out", default="fit.txt")
    s.set_defaults(func=cmd_fit_levels)
    inputs["fit-levels"] = {"levels"}

    s = sub.add_parser("replay", help="ideal vs realistic ring carpets of an axial packet")
    s.add_argument("--input", required=True)
    s.add_argument("--levels", help="realistic level file (default: bundled 238U band)")
    s.add_argument("--a", type=float, help="realistic polynomial a instead of a level file")
    s.add_argument("--b", type=float, default=0.0)
    s.add_argument("--omega0", type=float, help="ideal rigid-rotor constant (default: a)")
    _carpet_grid_args(s, 1.0)
    s.add_argument("--out", default="replay", help="output stem")
    s.set_defaults(func=cmd_replay)
    inputs["replay"] = {"input", "levels"}

    return p, inputs


def main(argv=None):
    parser, inputs = build_parser()
    args = parser.parse_args(argv)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        run = Run(args, inputs.get(args.command, set()))
        args.func(args, run)
        run.finish()
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rotorwp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RotorError as exc:
        print(f"rotorwp: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"rotorwp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
