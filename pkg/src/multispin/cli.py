"""Command-line interface: simulate, validate, bench, rngtest, selftest.

Configuration comes from an optional flat ``key = value`` file ('#' starts
a comment); every key can be overridden by the command-line flag of the
same name, and flags always win.  The environment variable
``MULTISPIN_THREADS`` overrides the configured thread count (flags still
beat it).  Trajectories are written as CSV with the header
``sweep,sim,temperature,abs_magnetization,energy_per_spin``, floats printed
with 9 significant digits, '.' decimals and plain newlines.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import bitkernels, engine as engine_mod
from .engine import Engine, neighbor_codes, run_simulations
from .lattice import LatticeDims, TC_OVER_J, pack, unpack
from .observables import Trajectory, summarize
from .reference import (
    checkerboard_sweep_plain,
    neighbor_code_brute,
    record_engine_randoms,
)
from .rng import (
    Xoshiro256pp,
    frequency_histogram,
    lag1_joint,
    load_bitstream,
    median_threshold_bits,
    run_battery,
    shape_unit_float,
)

__all__ = ["main", "SimConfig", "CSV_HEADER", "ENV_THREADS"]

CSV_HEADER = "sweep,sim,temperature,abs_magnetization,energy_per_spin"
ENV_THREADS = "MULTISPIN_THREADS"

# Pass/fail guard band around the critical temperature: inside it finite-size
# rounding dominates and validate reports values without judging them.
_BAND_LOW = 0.93 * TC_OVER_J
_BAND_HIGH = 1.10 * TC_OVER_J


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


@dataclass
class SimConfig:
    """Run settings shared by the simulate/validate/bench commands."""

    m: int = 64
    n: int = 64
    temperature: tuple = (2.0,)
    j: float = 1.0
    sweeps: int = 1000
    measure_interval: int = 100
    n_sim: int = 1
    seed: int = 1
    init: str = "random"
    output: str = ""
    threads: int = 0
    tolerance: float = 0.02
    disordered_cap: float = 0.10
    warmup: int = 10

    def dims(self) -> LatticeDims:
        return LatticeDims(self.m, self.n)

    def sim_temperatures(self) -> tuple:
        """One entry per simulation: each temperature n_sim times, in order."""
        return tuple(t for t in self.temperature for _ in range(self.n_sim))

    def effective_threads(self) -> int:
        """Configured count, or one worker per simulation up to the CPU count."""
        if self.threads > 0:
            return self.threads
        return max(1, min(len(self.sim_temperatures()), os.cpu_count() or 1))


def parse_temperatures(text: str) -> tuple:
    """Temperature spec: a value, a comma list, or ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"temperature range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("temperature range step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ValueError(f"temperature range {text!r} is empty")
        return tuple(round(start + k * step, 12) for k in range(count))
    return tuple(float(p) for p in text.split(",") if p.strip())


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` file with '#' comments."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


_INT_KEYS = {"m", "n", "sweeps", "measure_interval", "n_sim", "seed", "threads", "warmup"}
_FLOAT_KEYS = {"j", "tolerance", "disordered_cap"}


def build_config(args: argparse.Namespace) -> SimConfig:
    """Merge defaults, config file, environment, and flags (flags win)."""
    cfg = SimConfig()
    known = {f.name for f in fields(SimConfig)}
    if getattr(args, "config", None):
        for key, value in parse_config_file(args.config).items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            if key == "temperature":
                cfg.temperature = parse_temperatures(value)
            elif key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _FLOAT_KEYS:
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
    env_threads = os.environ.get(ENV_THREADS)
    if env_threads:
        cfg.threads = int(env_threads)
    for key in known:
        value = getattr(args, key, None)
        if value is None:
            continue
        setattr(cfg, key, parse_temperatures(value) if key == "temperature" else value)
    LatticeDims(cfg.m, cfg.n)
    if cfg.sweeps < 0:
        raise ValueError("sweeps must be non-negative")
    return cfg


def _add_sim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file ('#' comments)")
    parser.add_argument("--m", type=int, help="cell-axis extent (multiple of 4)")
    parser.add_argument("--n", type=int, help="memory-axis extent (multiple of 32)")
    parser.add_argument(
        "--temperature",
        help="temperature in units of J: one value, a comma list, or start:stop:step",
    )
    parser.add_argument("--j", type=float, help="ferromagnetic coupling J (default 1)")
    parser.add_argument("--sweeps", type=int, help="number of full sweeps")
    parser.add_argument("--measure-interval", dest="measure_interval", type=int,
                        help="sweeps between measurements")
    parser.add_argument("--n-sim", dest="n_sim", type=int,
                        help="independent simulations per temperature")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--init", choices=("random", "all-up"), help="initial spin state")
    parser.add_argument("--output", help="CSV output path (default stdout)")
    parser.add_argument(
        "--threads",
        type=int,
        help=f"worker threads over simulations (0 = auto; ${ENV_THREADS} overrides config)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multispin",
        description="Bit-packed multi-spin Monte Carlo for the 2D Ising model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run simulations and write a trajectory CSV")
    _add_sim_flags(p_sim)

    p_val = sub.add_parser("validate", help="compare equilibrated |M| against the exact curve")
    _add_sim_flags(p_val)
    p_val.add_argument("--tolerance", type=float,
                       help="allowed |deviation| below the critical region (default 0.02)")
    p_val.add_argument("--disordered-cap", dest="disordered_cap", type=float,
                       help="allowed |M| above the critical region (default 0.10)")

    p_bench = sub.add_parser("bench", help="throughput: flip rate and iteration period")
    _add_sim_flags(p_bench)
    p_bench.add_argument("--warmup", type=int, help="untimed warmup sweeps (default 10)")

    p_rng = sub.add_parser("rngtest", help="randomness battery, histogram, and lag-1 checks")
    p_rng.add_argument("--bits", type=int, default=6_400_000,
                       help="bit count for the battery (default 6400000)")
    p_rng.add_argument("--floats", type=int, default=1_000_000,
                       help="float count for histogram/lag-1 (default 1000000)")
    p_rng.add_argument("--seed", type=int, default=1, help="master seed (internal source)")
    p_rng.add_argument("--file", help="bit stream file (raw binary or ASCII 0/1) instead of the internal generator")
    p_rng.add_argument("--median-check", action="store_true",
                       help="also threshold 2**23 floats at their median and re-run the battery")
    p_rng.add_argument("--csv", help="also write machine-readable rows (name,p_value,passed)")

    sub.add_parser("selftest", help="fast invariant suite (round-trip, adder, audits, oracle)")
    return parser


def write_csv(trajectory: Trajectory, stream) -> None:
    """Deterministic trajectory rows: sweep-major, then simulation index."""
    stream.write(CSV_HEADER + "\n")
    temps = trajectory.temperatures
    for k in range(trajectory.n_measurements):
        sweep = int(trajectory.sweeps[k])
        for s in range(trajectory.n_sim):
            stream.write(
                f"{sweep},{s},{_fmt(temps[s])},"
                f"{_fmt(trajectory.abs_m[k, s])},{_fmt(trajectory.energy[k, s])}\n"
            )


def _run_config(cfg: SimConfig) -> Trajectory:
    return run_simulations(
        cfg.dims(),
        cfg.sim_temperatures(),
        cfg.seed,
        cfg.sweeps,
        measure_interval=cfg.measure_interval,
        init=cfg.init,
        coupling=cfg.j,
        threads=cfg.effective_threads(),
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    trajectory = _run_config(cfg)
    if cfg.output:
        with open(cfg.output, "w", encoding="ascii", newline="") as fh:
            write_csv(trajectory, fh)
        print(f"wrote {trajectory.n_measurements * trajectory.n_sim} rows to {cfg.output}")
    else:
        write_csv(trajectory, sys.stdout)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    trajectory = _run_config(cfg)
    temps = trajectory.temperatures
    print(f"# {cfg.m}x{cfg.n}, {cfg.sweeps} sweeps, seed {cfg.seed}, init {cfg.init}")
    print(f"{'T':>8} {'measured':>10} {'stderr':>9} {'onsager':>10} {'deviation':>10}  status")
    failures = 0
    by_temp: dict[float, list[float]] = {}
    for s, T in enumerate(temps):
        summ = summarize(trajectory.series(s), T, cfg.j)
        by_temp.setdefault(T, []).append(summ.mean_abs_m)
        scaled_t = T / cfg.j
        if scaled_t <= _BAND_LOW:
            ok = abs(summ.deviation) <= cfg.tolerance
            status = "pass" if ok else "FAIL"
        elif scaled_t >= _BAND_HIGH:
            ok = summ.mean_abs_m <= cfg.disordered_cap
            status = "pass" if ok else "FAIL"
        else:
            ok = True
            status = "near-Tc (not judged)"
        failures += 0 if ok else 1
        print(
            f"{T:8.4f} {summ.mean_abs_m:10.5f} {summ.stderr:9.5f} "
            f"{summ.onsager_abs_m:10.5f} {summ.deviation:+10.5f}  {status}"
        )
    unique_temps = sorted(by_temp)
    means = [float(np.mean(by_temp[t])) for t in unique_temps]
    tc = cfg.j * TC_OVER_J
    crossing = None
    for k in range(len(unique_temps) - 1):
        if means[k] >= 0.5 > means[k + 1]:
            t0, t1 = unique_temps[k], unique_temps[k + 1]
            crossing = t0 + (means[k] - 0.5) * (t1 - t0) / (means[k] - means[k + 1])
            break
    if min(unique_temps) < tc < max(unique_temps):
        if crossing is None:
            print("# |M| never crosses 0.5 inside the scan; Tc estimate omitted")
        else:
            print(f"# estimated Tc/J from |M|=0.5 crossing: {crossing / cfg.j:.4f} "
                  f"(exact {TC_OVER_J:.6f})")
    else:
        print(f"# warning: scan does not span Tc/J = {TC_OVER_J:.6f}; Tc estimate omitted")
    print(f"# {'PASS' if failures == 0 else 'FAIL'} ({failures} failing temperature(s))")
    return 0 if failures == 0 else 1


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    if len(cfg.temperature) != 1:
        raise ValueError("bench uses a single temperature")
    dims = cfg.dims()
    temperature = cfg.temperature[0]
    sizes = []
    k = 1
    while k < cfg.n_sim:
        sizes.append(k)
        k *= 2
    sizes.append(cfg.n_sim)
    print(f"# {dims.m}x{dims.n}, T={temperature}, {cfg.sweeps} timed sweeps "
          f"(+{cfg.warmup} warmup), threads={cfg.effective_threads()}")
    print(f"{'n_sim':>6} {'attempts':>14} {'flips/ns':>12} {'T_iter (ms)':>12} {'sweeps/s':>10}")
    for n_sim in sizes:
        temps = (temperature,) * n_sim
        eng_threads = cfg.effective_threads()
        t0 = time.perf_counter()
        if eng_threads == 1 or n_sim == 1:
            eng = Engine(dims, temps, cfg.seed, init=cfg.init, coupling=cfg.j)
            for _ in range(cfg.warmup):
                eng.sweep()
            attempts_before = eng.attempts
            t0 = time.perf_counter()
            for _ in range(cfg.sweeps):
                eng.sweep()
            elapsed = time.perf_counter() - t0
            attempts = eng.attempts - attempts_before
        else:
            run_simulations(dims, temps, cfg.seed, cfg.warmup,
                            measure_interval=max(1, cfg.warmup), init=cfg.init,
                            coupling=cfg.j, threads=eng_threads)
            t0 = time.perf_counter()
            traj = run_simulations(dims, temps, cfg.seed, cfg.sweeps,
                                   measure_interval=max(1, cfg.sweeps), init=cfg.init,
                                   coupling=cfg.j, threads=eng_threads)
            elapsed = time.perf_counter() - t0
            attempts = traj.meta["attempts"]
        expected = dims.sites * n_sim * cfg.sweeps
        if attempts != expected:
            raise AssertionError(f"attempt counter {attempts} != {expected}")
        flip_rate = attempts / (elapsed * 1e9)
        t_iter_ms = dims.sites * n_sim / flip_rate / 1e6
        print(f"{n_sim:6d} {attempts:14d} {flip_rate:12.6f} {t_iter_ms:12.4f} "
              f"{cfg.sweeps / elapsed:10.2f}")
    print("# host-hardware numbers for methodological comparison only; the flip "
          "rates of purpose-built accelerators (thousands of flips/ns across "
          "hundreds of parallel simulations) are not reproducible at desk scale")
    return 0


def _print_reports(reports, csv_rows) -> int:
    failures = 0
    for rep in reports:
        status = "pass" if rep.passed else "FAIL"
        print(f"{rep.name:28s} n={rep.n_bits:<10d} p={rep.p_value:.6f}  {status}")
        csv_rows.append(f"{rep.name},{_fmt(rep.p_value)},{int(rep.passed)}")
        failures += 0 if rep.passed else 1
    return failures


def cmd_rngtest(args: argparse.Namespace) -> int:
    csv_rows: list[str] = []
    failures = 0
    if args.file:
        bits = load_bitstream(args.file)
        print(f"# bit stream from {args.file}: {bits.size} bits")
        if args.bits and bits.size > args.bits:
            bits = bits[: args.bits]
        raw32 = np.packbits(bits[: bits.size // 32 * 32]).view(">u4").astype(np.uint32)
        floats = shape_unit_float(raw32) if raw32.size else np.empty(0)
    else:
        gen = Xoshiro256pp(args.seed)
        bits = gen.bits(args.bits)
        floats = Xoshiro256pp(args.seed, stream=1).unit_floats(args.floats)
        print(f"# internal generator, seed {args.seed}: {bits.size} bits, "
              f"{floats.size} shaped floats")

    failures += _print_reports(run_battery(bits), csv_rows)

    if floats.size >= 1000:
        # Spread envelopes hold at the reference sample size of one million;
        # smaller samples only have to avoid a degenerate (empty-bin) histogram.
        for width, envelope in ((0.01, 0.08), (0.1, 0.02)):
            hist = frequency_histogram(floats, width)
            ok = np.isfinite(hist.spread)
            if floats.size >= 1_000_000:
                ok = ok and hist.spread <= envelope
            print(f"{'frequency spread bin=' + str(width):28s} n={floats.size:<10d} "
                  f"spread={hist.spread * 100:.3f}%  "
                  f"{'pass' if ok else 'FAIL'}")
            csv_rows.append(f"frequency_spread_{width},{_fmt(hist.spread)},{int(ok)}")
            failures += 0 if ok else 1
        joint = lag1_joint(floats)
        status = "pass" if joint.passed else "FAIL"
        print(f"{'lag1_joint':28s} n={floats.size:<10d} p={joint.p_value:.6f}  {status}")
        csv_rows.append(f"lag1_joint,{_fmt(joint.p_value)},{int(joint.passed)}")
        failures += 0 if joint.passed else 1
    else:
        print("# too few floats for histogram/lag-1 summaries")

    if args.median_check:
        count = 1 << 23
        gen = Xoshiro256pp(args.seed, stream=2)
        med_bits = median_threshold_bits(gen.unit_floats(count))
        print(f"# median-threshold battery over {count} floats")
        failures += _print_reports(run_battery(med_bits), csv_rows)

    if args.csv:
        with open(args.csv, "w", encoding="ascii", newline="") as fh:
            fh.write("name,p_value,passed\n")
            fh.write("\n".join(csv_rows) + "\n")
    print(f"# {'PASS' if failures == 0 else 'FAIL'} ({failures} failing check(s))")
    return 0 if failures == 0 else 1


def _selftest_checks():
    from .lattice import LatticeDims as Dims

    def check_roundtrip():
        rng = np.random.default_rng(11)
        for _ in range(50):
            spins = rng.choice(np.array([-1, 1], np.int8), size=(12, 96))
            if not (unpack(pack(spins)) == spins).all():
                return "pack/unpack round trip broke"
        return None

    def check_adder():
        a, b, c, d = (np.uint16(x) for x in (0xFF00, 0xF0F0, 0xCCCC, 0xAAAA))
        ones, twos, fours = bitkernels.bitwise_add4(a, b, c, d)
        for bit in range(16):
            total = sum((int(x) >> bit) & 1 for x in (a, b, c, d))
            got = ((int(ones) >> bit) & 1) + 2 * ((int(twos) >> bit) & 1) + 4 * ((int(fours) >> bit) & 1)
            if got != total:
                return f"adder wrong at lane {bit}: {got} != {total}"
        return None

    def check_neighbor_codes():
        dims = Dims(12, 96)
        rng = np.random.default_rng(5)
        spins = rng.choice(np.array([-1, 1], np.int8), size=(12, 96))
        eng = Engine.from_lattices([spins], [2.0], seed=3)
        got = neighbor_codes(eng.packed(0))
        want = neighbor_code_brute(spins)
        bad = int((got != want).sum())
        return None if bad == 0 else f"{bad} neighbor codes differ from brute force"

    def check_halos():
        dims = Dims(12, 96)
        rng = np.random.default_rng(6)
        spins = rng.choice(np.array([-1, 1], np.int8), size=(12, 96))
        eng = Engine.from_lattices([spins], [2.0], seed=4)
        for _ in range(5):
            eng.sweep()
            bad = eng.halo_mismatches()
            if bad:
                return f"{bad} halo words off after a sweep"
        return None

    def check_equivalence(mutate: bool = False):
        dims = Dims(12, 96)
        eng = Engine(dims, [2.0], seed=99, init="random")
        start = eng.lattice(0).copy()
        rmap = record_engine_randoms(eng, 100)
        spins = start.copy()
        replay = Engine(dims, [2.0], seed=99, init="random")
        original = engine_mod.bitwise_add4
        if mutate:
            # Fault injection: corrupt one adder term and expect divergence.
            def broken_add4(a, b, c, d):
                ones, twos, fours = original(a, b, c, d)
                return ones, twos ^ np.uint16(0x0001), fours

            engine_mod.bitwise_add4 = broken_add4
        try:
            for k in range(100):
                replay.sweep()
                checkerboard_sweep_plain(spins, 2.0, rmap.for_sweep(k))
        finally:
            engine_mod.bitwise_add4 = original
        same = bool((replay.lattice(0) == spins).all())
        if mutate:
            return None if not same else "fault injection went undetected"
        return None if same else "engine diverged from the plain oracle"

    return (
        ("pack/unpack round trip (random 12x96)", check_roundtrip),
        ("half-adder place values (all 16 lane patterns)", check_adder),
        ("neighbor codes vs brute force (12x96)", check_neighbor_codes),
        ("halo audit over sweeps (12x96)", check_halos),
        ("100-sweep oracle equivalence (12x96)", lambda: check_equivalence(False)),
        ("fault injection detected (corrupted adder)", lambda: check_equivalence(True)),
    )


def cmd_selftest(_args: argparse.Namespace) -> int:
    failures = 0
    t_start = time.perf_counter()
    for name, check in _selftest_checks():
        t0 = time.perf_counter()
        problem = check()
        dt = time.perf_counter() - t0
        status = "pass" if problem is None else f"FAIL ({problem})"
        print(f"{name:48s} {dt:6.2f}s  {status}")
        failures += 0 if problem is None else 1
    print(f"# {'PASS' if failures == 0 else 'FAIL'} in {time.perf_counter() - t_start:.1f}s")
    return 0 if failures == 0 else 1


_COMMANDS = {
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "bench": cmd_bench,
    "rngtest": cmd_rngtest,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
