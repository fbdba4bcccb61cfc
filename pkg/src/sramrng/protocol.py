"""HB+ authentication fed by harvested entropy, plus the harvest scheduler
and the continuous-power / denial-of-service scenarios.

Only the tag's blinding vectors ``b`` are charged to the entropy pool.
Reader challenges and the tag's Bernoulli noise come from their own seeded
streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._validation import bits_to_hex, check_bits, check_count, check_positive
from .errors import (
    ConstraintError,
    InfeasibleError,
    InsufficientEntropy,
    TagStateError,
    UnknownProtocolError,
)
from .extractor import DEFAULT_DENSITY, PhConfig, free_region, harvest, ideal_extract
from .sram_model import TagState

__all__ = [
    "HbPlusParams",
    "HbSecrets",
    "EntropyPool",
    "RoundRecord",
    "AuthResult",
    "ScheduleResult",
    "PowerEvent",
    "DosWindow",
    "PROFILES",
    "keygen",
    "tag_round",
    "authenticate",
    "random_responder",
    "consumption_profile",
    "scheduled_auth",
    "harvest_cycles",
    "continuous_power_attack",
    "dos_window",
    "format_transcript",
]

PROFILES = {"hb_plus_parallel": 80 * 224, "hb_sharp": 512}
_ALIASES = {
    "hb-plus": "hb_plus_parallel",
    "hb_plus": "hb_plus_parallel",
    "hb-plus-parallel": "hb_plus_parallel",
    "hb-sharp": "hb_sharp",
}
SUPPLY_MODELS = ("entropy_capacity", "extractor_yield")
CONVENTIONS = ("between", "per")


@dataclass(frozen=True)
class HbPlusParams:
    secret_bits: int = 224
    rounds: int = 80
    noise_rate: float = 0.25
    accept_threshold_fraction: Optional[float] = None

    def __post_init__(self):
        check_count(self.secret_bits, "secret_bits", minimum=1)
        check_count(self.rounds, "rounds", minimum=1)
        if not 0 <= self.noise_rate < 0.5:
            raise ConstraintError(f"noise_rate must be in [0, 0.5), got {self.noise_rate}")
        if self.accept_threshold_fraction is None:
            object.__setattr__(self, "accept_threshold_fraction", (self.noise_rate + 0.5) / 2)
        if not self.noise_rate < self.accept_threshold_fraction < 0.5:
            raise ConstraintError("need noise_rate < accept_threshold_fraction < 0.5")

    @property
    def max_mismatches(self) -> int:
        return int(np.floor(self.accept_threshold_fraction * self.rounds))


@dataclass(frozen=True)
class HbSecrets:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ConstraintError("x and y must be equal-length bit vectors")


@dataclass
class EntropyPool:
    """FIFO of harvested random bits."""

    bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    drawn: int = 0
    refills: int = 0

    @property
    def remaining(self) -> int:
        return int(self.bits.size)

    @property
    def total_deposited(self) -> int:
        return self.drawn + self.remaining

    def deposit(self, bits) -> None:
        self.bits = np.concatenate([self.bits, check_bits(bits)])
        self.refills += 1

    def draw(self, n: int) -> np.ndarray:
        if n > self.remaining:
            raise InsufficientEntropy(n, self.remaining)
        out, self.bits = self.bits[:n].copy(), self.bits[n:]
        self.drawn += n
        return out


@dataclass(frozen=True)
class RoundRecord:
    b: np.ndarray
    a: np.ndarray
    z: int
    noise_bit: int


@dataclass
class AuthResult:
    accepted: bool
    mismatches: int
    entropy_consumed: int
    transcript: list


def _dot(u, v) -> int:
    return int(np.bitwise_and(u, v).sum() & 1)


def keygen(params: HbPlusParams = HbPlusParams(), seed: int = 0) -> HbSecrets:
    rng = np.random.default_rng(seed)
    k = params.secret_bits
    return HbSecrets(rng.integers(0, 2, k, dtype=np.uint8), rng.integers(0, 2, k, dtype=np.uint8))


def tag_round(secrets: HbSecrets, a, pool: EntropyPool, noise_rate: float,
              noise_rng: np.random.Generator) -> RoundRecord:
    a = check_bits(a, "a")
    b = pool.draw(secrets.x.size)
    nu = int(noise_rng.random() < noise_rate)
    z = _dot(a, secrets.x) ^ _dot(b, secrets.y) ^ nu
    return RoundRecord(b=b, a=a, z=z, noise_bit=nu)


def random_responder(seed: int) -> Callable:
    """An impostor that sends random blinding vectors and guesses ``z``."""
    rng = np.random.default_rng(seed)

    def respond(a):
        b = rng.integers(0, 2, a.size, dtype=np.uint8)
        return RoundRecord(b=b, a=a, z=int(rng.integers(0, 2)), noise_bit=0)

    return respond


def authenticate(secrets: HbSecrets, params: HbPlusParams, pool: Optional[EntropyPool],
                 challenge_seed: int, noise_seed: int,
                 responder: Optional[Callable] = None) -> AuthResult:
    """Run ``params.rounds`` HB+ rounds and apply the reader's threshold.

    ``responder`` replaces the honest tag (it maps a challenge to a
    :class:`RoundRecord`); by default the tag answers from ``pool``.
    """
    challenges = np.random.default_rng(challenge_seed)
    noise = np.random.default_rng(noise_seed)
    if responder is None:
        def responder(a):
            return tag_round(secrets, a, pool, params.noise_rate, noise)

    transcript = []
    mismatches = 0
    drawn_before = pool.drawn if pool is not None else 0
    for i in range(params.rounds):
        a = challenges.integers(0, 2, params.secret_bits, dtype=np.uint8)
        try:
            rec = responder(a)
        except InsufficientEntropy as exc:
            exc.round_index = i
            raise
        expected = _dot(a, secrets.x) ^ _dot(rec.b, secrets.y)
        mismatches += rec.z != expected
        transcript.append(rec)
    consumed = (pool.drawn - drawn_before) if pool is not None else 0
    return AuthResult(mismatches <= params.max_mismatches, int(mismatches), consumed, transcript)


def format_transcript(records) -> str:
    """One line per round: ``index a b z`` with vectors as uppercase hex."""
    lines = [f"{i} {bits_to_hex(r.a)} {bits_to_hex(r.b)} {r.z}" for i, r in enumerate(records)]
    return "\n".join(lines) + ("\n" if lines else "")


def consumption_profile(protocol_name: str) -> int:
    name = _ALIASES.get(protocol_name, protocol_name)
    try:
        return PROFILES[name]
    except KeyError:
        raise UnknownProtocolError(f"unknown protocol {protocol_name!r}") from None


def canonical_protocol(protocol_name: str) -> str:
    consumption_profile(protocol_name)
    return _ALIASES.get(protocol_name, protocol_name)


@dataclass(frozen=True)
class PowerEvent:
    time_s: float
    kind: str  # power_on | harvest | power_off | wait
    bits: int = 0


@dataclass
class ScheduleResult:
    harvests: int
    sim_wall_time_s: float
    events: list
    pool: EntropyPool
    supply_per_harvest: int


def scheduled_auth(tag: TagState, cfg: PhConfig, profile_bits: int, cooldown_s: float,
                   supply_model: str = "entropy_capacity", convention: str = "between",
                   density: float = DEFAULT_DENSITY) -> ScheduleResult:
    """Harvest, power off, cool down, repeat until ``profile_bits`` are banked.

    ``supply_model="extractor_yield"`` banks the PH output itself;
    ``"entropy_capacity"`` banks an idealized extraction of the same memory
    at the region's full entropy capacity.  ``convention`` selects whether
    waiting is counted only between harvests or before every harvest; in the
    latter case a final cooldown is appended to the tag clock.
    """
    profile_bits = check_count(profile_bits, "profile_bits", minimum=1)
    check_positive(cooldown_s, "cooldown_s")
    if supply_model not in SUPPLY_MODELS:
        raise ConstraintError(f"supply_model must be one of {SUPPLY_MODELS}")
    if convention not in CONVENTIONS:
        raise ConstraintError(f"convention must be one of {CONVENTIONS}")
    if tag.powered:
        raise TagStateError("scheduled_auth needs an unpowered tag")

    pool = EntropyPool()
    events = []
    harvests = 0
    supply = None
    while pool.total_deposited < profile_bits:
        if harvests:
            tag.advance_to(tag.clock_s + cooldown_s)
            events.append(PowerEvent(tag.clock_s, "wait"))
        tag.power_on(tag.clock_s)
        events.append(PowerEvent(tag.clock_s, "power_on"))
        report = harvest(tag, cfg, density)
        if supply_model == "extractor_yield":
            bits = report.bits
        else:
            bits = ideal_extract(free_region(tag), report.entropy_capacity_bits)
        if bits.size == 0:
            raise InfeasibleError("harvest supplies zero bits")
        supply = bits.size
        pool.deposit(bits)
        harvests += 1
        events.append(PowerEvent(tag.clock_s, "harvest", int(bits.size)))
        tag.power_off(tag.clock_s)
        events.append(PowerEvent(tag.clock_s, "power_off"))

    waits = harvests - 1 if convention == "between" else harvests
    if convention == "per":
        tag.advance_to(tag.clock_s + cooldown_s)
        events.append(PowerEvent(tag.clock_s, "wait"))
    return ScheduleResult(harvests, waits * cooldown_s, events, pool, supply)


def harvest_cycles(tag: TagState, cfg: PhConfig, cycles: int, off_interval_s: float = 0.0) -> list:
    """Harvest ``cycles`` times, removing power for ``off_interval_s`` in between.

    With ``off_interval_s == 0`` the tag is never powered down, which is
    what a reader polling the tag does.
    """
    cycles = check_count(cycles, "cycles", minimum=1)
    check_positive(off_interval_s, "off_interval_s", allow_zero=True)
    outputs = []
    for i in range(cycles):
        if not tag.powered:
            tag.power_on(tag.clock_s)
        outputs.append(harvest(tag, cfg).bits)
        if off_interval_s > 0 and i < cycles - 1:
            tag.power_off(tag.clock_s)
            tag.advance_to(tag.clock_s + off_interval_s)
    return outputs


def continuous_power_attack(tag: TagState, cfg: PhConfig = PhConfig(), queries: int = 1) -> list:
    """Keep the tag powered and query it ``queries`` times."""
    return harvest_cycles(tag, cfg, queries, 0.0)


@dataclass(frozen=True)
class DosWindow:
    starved: bool


def dos_window(cooldown_s: float, attacker_query_period_s: float) -> DosWindow:
    """Whether an attacker re-powering the tag every period prevents any cooldown."""
    check_positive(cooldown_s, "cooldown_s")
    check_positive(attacker_query_period_s, "attacker_query_period_s")
    return DosWindow(starved=attacker_query_period_s < cooldown_s)
