"""Command line front end.

rotant [--seed S] [--out PATH] [--format csv|json] [--trials T] <command> ...

  reproduce <fig-id>   run a figure sweep (fig10..fig14, custom) from defaults or --config
  simulate             per-antenna channel of a single-user scenario under fixed and optimized pointing
  optimize             run one orientation optimizer and compare with fixed pointing
  estimate             run one estimator on a multipath training scenario
  beamtrain            exhaustive vs hierarchical orientation/beam codebook search

The seed falls back to $RA_SEED, then to the config, then to 0.  Exit
codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from ..errors import ConfigurationError
from .config import EXPERIMENTS, default_scenario, load_config
from .experiments import (
    estimation_scenario,
    isac_scenario,
    miso_scenario,
    multiuser_scenario,
    run_experiment,
    trial_rng,
)
from .results import ResultTable, emit_results

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default $RA_SEED or 0)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    p.add_argument("--trials", type=int, default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = _Parser(prog="rotant", description="Rotatable-antenna experiments", parents=[common])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    r = sub.add_parser("reproduce", parents=[common], help="run a figure sweep")
    r.add_argument("figure", choices=EXPERIMENTS)
    r.add_argument("--config", help="JSON experiment file")
    r.add_argument("--workers", type=int, default=1, help="processes for trials")

    s = sub.add_parser("simulate", parents=[common], help="per-antenna channel, fixed vs optimized")
    s.add_argument("--antennas", type=int, default=16)

    o = sub.add_parser("optimize", parents=[common], help="one optimizer vs fixed pointing")
    o.add_argument("--problem", choices=("miso", "maxmin", "wideband", "isac"), default="miso")
    o.add_argument("--antennas", type=int, default=16, help="ULA size for miso")

    e = sub.add_parser("estimate", parents=[common], help="one estimator on a training scenario")
    e.add_argument("--method", choices=("ml", "music", "omp"), default="ml")
    e.add_argument("--antennas", type=int, default=16)
    e.add_argument("--strategy", choices=("fixed", "dynamic-designed", "dynamic-random"),
                   default="dynamic-designed")

    b = sub.add_parser("beamtrain", parents=[common], help="codebook search")
    b.add_argument("--antennas", type=int, default=8)
    b.add_argument("--codebook", type=int, default=16, help="orientation and beam codebook size")
    return ap


def resolve_seed(args, fallback: int = 0) -> int:
    if hasattr(args, "seed"):
        return args.seed
    env = os.environ.get("RA_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"RA_SEED must be an integer, got {env!r}") from None
    return fallback


# --- subcommands ---------------------------------------------------------------------

def _reproduce(args) -> tuple[ResultTable, str, str | None]:
    cfg = load_config(args.config, args.figure)
    cfg.seed = resolve_seed(args, cfg.seed)
    if hasattr(args, "trials"):
        cfg.trials = args.trials
    cfg.__post_init__()
    fmt = getattr(args, "format", cfg.format)
    out = getattr(args, "out", cfg.output)
    if args.workers < 1:
        raise ConfigurationError("--workers must be >= 1")
    return run_experiment(cfg, workers=args.workers), fmt, out


def _simulate(args, seed: int) -> ResultTable:
    from ..channel import total_channel
    from ..optimize import fixed_orientations, optimal_pointing_miso

    s = miso_scenario(default_scenario("fig11"), args.antennas)
    t = ResultTable("simulate", "antenna", seed)
    orients = {"fixed": fixed_orientations(s.n_antennas), "RA": optimal_pointing_miso(s).orientations}
    for scheme, o in orients.items():
        h = total_channel(s, o, 0)
        for n in range(s.n_antennas):
            t.add(n, scheme, "channel_gain_dB", [20 * np.log10(abs(h[n]))], "dB")
            t.add(n, scheme, "channel_phase_rad", [float(np.angle(h[n]))], "rad")
    return t


def _optimize(args, seed: int) -> ResultTable:
    from ..channel import WidebandConfig
    from ..optimize import (
        SensingTask,
        fixed_orientations,
        isac_minecho_bcd,
        maxmin_rate,
        maxmin_sinr_ao,
        optimal_pointing_miso,
        snr_at,
        wideband_sumrate_ao,
    )
    from ..units import watt_to_dbm

    t = ResultTable("optimize", "problem", seed)
    if args.problem == "miso":
        s = miso_scenario(default_scenario("fig11"), args.antennas)
        ra = optimal_pointing_miso(s)
        fx = snr_at(s, fixed_orientations(s.n_antennas))
        t.add(s.n_antennas, "RA", "snr_dB", [10 * np.log10(ra.objective)], "dB")
        t.add(s.n_antennas, "fixed", "snr_dB", [10 * np.log10(fx)], "dB")
    elif args.problem in ("maxmin", "wideband"):
        p = default_scenario("fig12" if args.problem == "maxmin" else "fig13")
        s, _ = multiuser_scenario(p, trial_rng(seed, 0))
        e1 = np.tile([1.0, 0.0, 0.0], (s.n_antennas, 1))
        if args.problem == "maxmin":
            from ..geometry import Orientation

            t.add(s.n_users, "RA", "min_rate_bps_hz", [maxmin_sinr_ao(s).objective], "bit/s/Hz")
            t.add(s.n_users, "fixed", "min_rate_bps_hz", [maxmin_rate(s, Orientation.boresight(s.n_antennas))],
                  "bit/s/Hz")
        else:
            wb = WidebandConfig(p["bandwidth"], 64, int(p["cp_length"]))
            t.add(64, "RA", "sum_rate_bps_hz", [wideband_sumrate_ao(s, wb).objective], "bit/s/Hz")
            t.add(64, "fixed", "sum_rate_bps_hz",
                  [wideband_sumrate_ao(s, wb, init=e1, optimize_orientation=False).objective], "bit/s/Hz")
    else:
        p = default_scenario("fig14")
        s = isac_scenario(p)
        task = SensingTask(p["target_center"], p["target_radius"], int(p["target_samples"]), rate_min=4.0)
        e1 = np.tile([1.0, 0.0, 0.0], (s.n_antennas, 1))
        for scheme, res in (("RA", isac_minecho_bcd(s, task)),
                            ("fixed", isac_minecho_bcd(s, task, init=e1, optimize_orientation=False))):
            t.add(4.0, scheme, "min_echo_power_dBm", [float(watt_to_dbm(res.objective))], "dBm")
    return t


def _estimate(args, seed: int) -> ResultTable:
    from ..estimate import (
        angle_dictionary,
        angle_error,
        grid_directions,
        ls_coefficients,
        ml_estimate,
        music_estimate,
        noise_for_snr,
        omp_recover,
        reconstruct_and_nmse,
        schedule_orientations,
        simulate_pilots,
        true_parameters,
        PathParameters,
    )
    from ..estimate.model import angles_of

    p = default_scenario("fig10")
    trials = getattr(args, "trials", 1)
    t = ResultTable("estimate", "antennas", seed)
    errs, nm = [], []
    for tr in range(trials):
        rng = trial_rng(seed, tr)
        s = estimation_scenario(p, args.antennas, rng)
        q = int(p["scatterers"])
        sch = schedule_orientations(s.constraint, args.antennas, int(p["blocks"]), args.strategy,
                                    total_slots=int(p["total_slots"]), seed=int(rng.integers(2 ** 31)))
        m = simulate_pilots(s, sch, seed=seed, trial=tr, noise_power=noise_for_snr(s, p["snr_db"]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            if args.method == "ml":
                est = ml_estimate(m, sch, s, q, k=0, grid_step=np.deg2rad(2.0))
            elif args.method == "music":
                # orthogonal pilots make each user one rank-1 source per block; the
                # peaks approximate the LoS directions and user 0 is fitted on all of them
                ang = music_estimate(m, sch, s, s.n_users, grid_step=np.deg2rad(2.0))
                est = PathParameters(ls_coefficients(m, sch, s, ang.theta, ang.xi), ang.theta, ang.xi)
            else:
                _, _, gd = grid_directions(np.deg2rad(2.0))
                phi, norms, keep = angle_dictionary(s, sch, gd)
                r = omp_recover(m.despread(0).reshape(-1), phi, q + 1)
                th, xi = angles_of(gd[keep[r.support]])
                est = PathParameters(r.coefs / norms[r.support], th, xi)
        tp = true_parameters(s, 0)
        errs.append(float(np.rad2deg(np.min(angle_error(est.theta, est.xi, tp.theta[0], tp.xi[0])))))
        nm.append(10 * np.log10(reconstruct_and_nmse([est], s, sch.orientations)))
    t.add(args.antennas, args.method, "los_angle_error_deg", errs, "deg")
    t.add(args.antennas, args.method, "nmse_dB", nm, "dB")
    return t


def _beamtrain(args, seed: int) -> ResultTable:
    from ..estimate import beam_train, channel_oracle, dft_codebook, orientation_codebook

    p = default_scenario("fig10")
    trials = getattr(args, "trials", 1)
    t = ResultTable("beamtrain", "antennas", seed)
    ratio, probes = {"exhaustive": [], "hierarchical": []}, {"exhaustive": [], "hierarchical": []}
    for tr in range(trials):
        s = estimation_scenario(p, args.antennas, trial_rng(seed, tr))
        book, groups = orientation_codebook(s.constraint.theta_max, args.antennas, size=args.codebook)
        beams = dft_codebook(s.layout.positions, args.codebook, s.wavelength)
        ch = channel_oracle(s, 0)
        ex = beam_train(ch, book, beams)
        for name, res in (("exhaustive", ex), ("hierarchical",
                                               beam_train(ch, book, beams, "hierarchical", orient_groups=groups))):
            ratio[name].append(res.power / ex.power)
            probes[name].append(res.probes)
    for name in ratio:
        t.add(args.antennas, name, "power_ratio", ratio[name], "1")
        t.add(args.antennas, name, "probes", probes[name], "1")
    return t


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "trials", 1) < 1:
            raise ConfigurationError("--trials must be >= 1")
        if args.command == "reproduce":
            table, fmt, out = _reproduce(args)
        else:
            seed = resolve_seed(args)
            table = {"simulate": _simulate, "optimize": _optimize, "estimate": _estimate,
                     "beamtrain": _beamtrain}[args.command](args, seed)
            fmt, out = getattr(args, "format", "csv"), getattr(args, "out", None)
        emit_results(table, fmt, out)
        return EXIT_OK
    except ConfigurationError as e:
        print(f"rotant: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - every other failure is a runtime error
        print(f"rotant: error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
