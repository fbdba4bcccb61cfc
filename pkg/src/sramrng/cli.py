"""Command-line front end.

    sramrng [--seed N] [--config FILE] [--out PATH] {decay,budget,harvest,auth} ...

Settings come from built-in defaults, then the TOML config file, then
flags.  Output files are written to a temporary sibling and renamed into
place, so a failed run never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import bits_to_hex, derive_seed
from .entropy import budget, budget_from_capacity
from .errors import RangeError, SimulationError
from .extractor import DEFAULT_DENSITY, PhConfig
from .protocol import (
    HbPlusParams,
    authenticate,
    canonical_protocol,
    consumption_profile,
    format_transcript,
    harvest_cycles,
    keygen,
    scheduled_auth,
)
from .remanence_lab import fit_logistic, parse_intervals, run_decay_experiment, write_fits_csv, write_samples_csv
from .remanence_lab import DecaySample
from .sram_model import GENERATIONS, DecayParams, TagSpec, create_tag

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BUDGET_HEADER = (
    "generation", "free_bytes", "capacity_bits", "protocol", "protocol_bits",
    "harvests", "wait_between_s", "wait_per_s", "supply_model",
)

# substream labels under the global seed
_TAG, _PATTERN, _KEYS, _CHALLENGE, _NOISE = range(5)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    seed: Optional[int] = None
    tag: TagSpec = field(default_factory=TagSpec)
    decay: DecayParams = field(default_factory=DecayParams)
    word_bits: int = 16
    output_path: Optional[str] = None

    @property
    def ph(self) -> PhConfig:
        return PhConfig(self.word_bits)

    def require_seed(self) -> int:
        if self.seed is None:
            raise UsageError("this command needs --seed (or seed in the config file)")
        return self.seed


def load_config(path: Optional[str], args) -> RunConfig:
    data = {}
    if path:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None

    tag_kw = dict(data.get("tag", {}))
    decay_kw = dict(data.get("decay", {}))
    if "midpoint_range" in decay_kw:
        decay_kw["midpoint_range"] = tuple(decay_kw["midpoint_range"])
    try:
        cfg = RunConfig(
            seed=data.get("seed"),
            tag=TagSpec(**tag_kw),
            decay=DecayParams(**decay_kw),
            word_bits=data.get("ph", {}).get("word_bits", 16),
            output_path=data.get("out"),
        )
    except TypeError as exc:
        raise UsageError(f"bad config key: {exc}") from None

    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.output_path = args.out
    if getattr(args, "word_bits", None) is not None:
        cfg.word_bits = args.word_bits
    if getattr(args, "temperature", None) is not None:
        cfg.tag = dataclasses.replace(cfg.tag, temperature_c=args.temperature)
    PhConfig(cfg.word_bits)
    return cfg


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sramrng-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str, stdout) -> None:
    if cfg.output_path in (None, "-"):
        stdout.write(text)
    else:
        _atomic_write(cfg.output_path, text)


def _num(x) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.6f}"


def _tag_spec_for(cfg: RunConfig, generation: Optional[str]) -> TagSpec:
    if generation in (None, "custom"):
        return cfg.tag
    base = GENERATIONS[generation]
    return dataclasses.replace(cfg.tag, total_bytes=base.total_bytes, reserved_bytes=base.reserved_bytes)


def cmd_decay(cfg: RunConfig, args, stdout, stderr=sys.stderr) -> None:
    seed = cfg.require_seed()
    try:
        intervals = parse_intervals(args.intervals)
    except RangeError as exc:
        raise UsageError(str(exc)) from None
    if args.tags < 1:
        raise UsageError("--tags must be >= 1")

    per_tag = []
    for i in range(args.tags):
        tag = create_tag(cfg.tag, cfg.decay, derive_seed(seed, _TAG, i))
        per_tag.append(run_decay_experiment(tag, intervals, derive_seed(seed, _PATTERN, i), tag_id=str(i)))

    rows = [s for samples in per_tag for s in samples]
    for j, t in enumerate(intervals):
        mean = float(np.mean([samples[j].hamming for samples in per_tag]))
        rows.append(DecaySample("mean", t, mean))

    fits = []
    for i, samples in enumerate(per_tag):
        try:
            fits.append((str(i), fit_logistic(samples)))
        except SimulationError as exc:
            print(f"note: no fit for tag {i}: {exc}", file=stderr)

    samples_text = write_samples_csv(rows)
    fits_text = write_fits_csv(fits) if fits else ""
    if cfg.output_path in (None, "-"):
        stdout.write(samples_text + ("\n" + fits_text if fits_text else ""))
        return
    fits_path = args.fits_out or _fits_path(cfg.output_path)
    _atomic_write(cfg.output_path, samples_text)
    if fits_text:
        _atomic_write(fits_path, fits_text)


def _fits_path(out: str) -> str:
    root, ext = os.path.splitext(out)
    return f"{root}.fits{ext or '.csv'}"


def budget_rows(generation: str, free_bytes: int, protocol: str, density: float,
                cooldown_s: float, word_bits: int = 16) -> list:
    """The two budget rows (entropy capacity and literal PH yield) for one case."""
    name = canonical_protocol(protocol)
    demand = consumption_profile(name)
    ph = PhConfig(word_bits)
    yield_bits = (free_bytes * 8 // ph.chunk_bits) * ph.output_bits
    rows = [
        ("entropy_capacity", budget(free_bytes, density, demand, cooldown_s)),
        ("extractor_yield", budget_from_capacity(free_bytes, yield_bits, demand, cooldown_s)),
    ]
    return [(generation, name, model, row) for model, row in rows]


def cmd_budget(cfg: RunConfig, args, stdout, stderr=sys.stderr) -> None:
    if args.generation == "custom":
        free = args.free_bytes if args.free_bytes is not None else cfg.tag.free_bytes
    else:
        free = GENERATIONS[args.generation].free_bytes
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BUDGET_HEADER)
    for gen, name, model, row in budget_rows(args.generation, free, args.protocol, args.density,
                                             args.cooldown, cfg.word_bits):
        w.writerow((gen, row.free_bytes, row.capacity_bits, name, row.protocol_bits, row.harvests,
                    _num(row.wait_s_between), _num(row.wait_s_per), model))
    _emit(cfg, buf.getvalue(), stdout)


def cmd_harvest(cfg: RunConfig, args, stdout, stderr=sys.stderr) -> None:
    seed = cfg.require_seed()
    if args.cycles < 1:
        raise UsageError("--cycles must be >= 1")
    if args.off_interval < 0:
        raise UsageError("--off-interval must be >= 0")
    tag = create_tag(_tag_spec_for(cfg, args.generation), cfg.decay, derive_seed(seed, _TAG, 0))
    outputs = harvest_cycles(tag, cfg.ph, args.cycles, args.off_interval)
    _emit(cfg, "".join(bits_to_hex(bits) + "\n" for bits in outputs), stdout)


def cmd_auth(cfg: RunConfig, args, stdout, stderr=sys.stderr) -> None:
    seed = cfg.require_seed()
    name = canonical_protocol(args.protocol)
    demand = consumption_profile(name)
    tag = create_tag(_tag_spec_for(cfg, args.generation), cfg.decay, derive_seed(seed, _TAG, 0))
    sched = scheduled_auth(tag, cfg.ph, demand, args.cooldown, args.supply_model, args.convention)

    if name == "hb_plus_parallel":
        params = HbPlusParams()
        secrets = keygen(params, derive_seed(seed, _KEYS))
        result = authenticate(secrets, params, sched.pool, derive_seed(seed, _CHALLENGE),
                              derive_seed(seed, _NOISE))
        status = "accepted" if result.accepted else "rejected"
        consumed = result.entropy_consumed
        if args.transcript:
            _atomic_write(args.transcript, format_transcript(result.transcript))
    else:
        # HB# internals are not simulated; only its entropy draw is
        sched.pool.draw(demand)
        status = "drawn"
        consumed = demand
    line = f"{sched.harvests} harvests, {_num(sched.sim_wall_time_s)} s, {status}, {consumed} bits\n"
    _emit(cfg, line, stdout)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS, help="TOML run configuration")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file (default: stdout)")
    common.add_argument("--word-bits", type=int, choices=(16, 64), default=argparse.SUPPRESS)
    common.add_argument("--temperature", type=float, default=argparse.SUPPRESS, help="ambient temperature in C")

    parser = _Parser(prog="sramrng", parents=[common],
                     description="SRAM remanence and RAM-based RNG simulator for RFID tags")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decay", parents=[common], help="timed power-off decay experiment")
    p.add_argument("--tags", type=int, default=4)
    p.add_argument("--intervals", default="0:5:60", help="start:step:end in seconds")
    p.add_argument("--fits-out", default=None, help="fit table path (default: <out>.fits.csv)")
    p.set_defaults(func=cmd_decay)

    protocols = ("hb-plus", "hb-sharp", "hb_plus_parallel", "hb_sharp")
    p = sub.add_parser("budget", parents=[common], help="harvest/wait budget table")
    p.add_argument("--protocol", choices=protocols, default="hb-plus")
    p.add_argument("--generation", choices=("wisp41", "wisp2x", "custom"), default="wisp41")
    p.add_argument("--free-bytes", type=int, default=None, help="free RAM for --generation custom")
    p.add_argument("--density", type=float, default=DEFAULT_DENSITY)
    p.add_argument("--cooldown", type=float, default=30.0)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("harvest", parents=[common], help="repeated harvests as hex lines")
    p.add_argument("--cycles", type=int, default=1)
    p.add_argument("--off-interval", type=float, default=0.0)
    p.add_argument("--generation", choices=("wisp41", "wisp2x", "custom"), default="custom")
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("auth", parents=[common], help="scheduled harvests plus an authentication run")
    p.add_argument("--protocol", choices=protocols, default="hb-plus")
    p.add_argument("--generation", choices=("wisp41", "wisp2x", "custom"), default="wisp41")
    p.add_argument("--supply-model", choices=("entropy_capacity", "extractor_yield"), default="entropy_capacity")
    p.add_argument("--convention", choices=("between", "per"), default="between")
    p.add_argument("--cooldown", type=float, default=30.0)
    p.add_argument("--transcript", default=None, help="write round transcript to this file")
    p.set_defaults(func=cmd_auth)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(getattr(args, "config", None), args)
        args.func(cfg, args, stdout, stderr)
    except UsageError as exc:
        print(f"sramrng: usage error: {exc}", file=stderr)
        return 2
    except (SimulationError, OSError, ValueError) as exc:
        print(f"sramrng: error: {' '.join(str(exc).split())}", file=stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
