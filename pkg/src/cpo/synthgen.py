"""Seeded synthetic analyst feedback loops with planted outcome effects.

Randomness comes from a 64-bit linear congruential generator with fixed,
documented constants rather than :mod:`random`, so a seed reproduces the
same log in any implementation:

    state' = (6364136223846793005 * state + 1442695040888963407) mod 2**64

``uniform()`` uses the top 53 bits, ``below(n)`` the top 32 bits modulo
``n``, and Gaussian noise uses Box-Muller on two uniforms.

Each loop iteration is a chain of steps: the first consumes a fresh source
artifact, each later step consumes the previous step's output. The
outcome of an iteration is ``intercept + sum(effect[code] for each step)``
plus optional noise, clipped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from decimal import Decimal
from typing import Any, Mapping

from .errors import InvalidSpecError
from .graph import canonical_decimal, format_decimal
from .reasoner import VeridicalityMark, marks_to_document
from .tagger import (
    EventRecord,
    MappingTable,
    dump_event_log,
    format_instant,
    outcomes_to_document,
)
from .taxonomy import load_builtin_taxonomy

LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1

START = datetime(2024, 1, 1, tzinfo=timezone.utc)
ENVIRONMENT = "analysis-workstation"
DEFAULT_CONFIDENCE = Decimal("0.8")
NOISE_QUANTUM = Decimal("0.000001")


class LCG64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (LCG_MULTIPLIER * self.state + LCG_INCREMENT) & _MASK
        return self.state

    def uniform(self) -> float:
        return (self.next_u64() >> 11) / float(1 << 53)

    def below(self, n: int) -> int:
        return (self.next_u64() >> 32) % n

    def gauss(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    n_loops: int = 10
    iterations_per_loop: int = 5
    step_alphabet: tuple[tuple[str, str], ...] = (
        ("ACH_RUN", "InvestigativeProcess"),
        ("QUERY", "CognitiveProcess"),
    )
    planted_intercept: Decimal = Decimal("0.3")
    planted_effects: Mapping[str, Decimal] = field(default_factory=lambda: {"ACH_RUN": Decimal("0.2")})
    noise_sd: Decimal = Decimal(0)
    bad_source_rate: Decimal = Decimal(0)
    min_steps: int = 1
    max_steps: int = 3
    n_units: int = 2

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "planted_intercept", canonical_decimal(self.planted_intercept))
            object.__setattr__(self, "noise_sd", canonical_decimal(self.noise_sd))
            object.__setattr__(self, "bad_source_rate", canonical_decimal(self.bad_source_rate))
            object.__setattr__(
                self, "planted_effects", {k: canonical_decimal(v) for k, v in dict(self.planted_effects).items()}
            )
        except ValueError as exc:
            raise InvalidSpecError(str(exc)) from None
        object.__setattr__(self, "step_alphabet", tuple(tuple(x) for x in self.step_alphabet))
        self.validate()

    def validate(self) -> None:
        if not self.step_alphabet:
            raise InvalidSpecError("step_alphabet must not be empty")
        codes = [c for c, _ in self.step_alphabet]
        if len(set(codes)) != len(codes):
            raise InvalidSpecError("duplicate activity codes in step_alphabet")
        tax = load_builtin_taxonomy()
        for code, cls in self.step_alphabet:
            if cls not in tax or not tax.is_subclass_of(cls, "CognitiveProcess"):
                raise InvalidSpecError(f"{code}: {cls!r} is not a kind of CognitiveProcess")
        unknown = sorted(set(self.planted_effects) - set(codes))
        if unknown:
            raise InvalidSpecError(f"planted_effects name codes outside the alphabet: {unknown}")
        for name in ("n_loops", "iterations_per_loop", "n_units"):
            if getattr(self, name) < 1:
                raise InvalidSpecError(f"{name} must be at least 1")
        if not (1 <= self.min_steps <= self.max_steps):
            raise InvalidSpecError("need 1 <= min_steps <= max_steps")
        if self.noise_sd < 0:
            raise InvalidSpecError("noise_sd must be >= 0")
        if not (0 <= self.bad_source_rate <= 1):
            raise InvalidSpecError("bad_source_rate must be within [0, 1]")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GenSpec":
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(d) - known - {"format_version"})
        if extra:
            raise InvalidSpecError(f"unknown GenSpec field(s): {extra}")
        kwargs = {k: v for k, v in d.items() if k in known}
        if "step_alphabet" in kwargs:
            kwargs["step_alphabet"] = tuple(tuple(x) for x in kwargs["step_alphabet"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise InvalidSpecError(str(exc)) from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "n_loops": self.n_loops,
            "iterations_per_loop": self.iterations_per_loop,
            "step_alphabet": [list(x) for x in self.step_alphabet],
            "planted_intercept": format_decimal(self.planted_intercept),
            "planted_effects": {k: format_decimal(v) for k, v in sorted(self.planted_effects.items())},
            "noise_sd": format_decimal(self.noise_sd),
            "bad_source_rate": format_decimal(self.bad_source_rate),
            "min_steps": self.min_steps,
            "max_steps": self.max_steps,
            "n_units": self.n_units,
        }


@dataclass
class Generated:
    events: list[EventRecord]
    table: MappingTable
    outcomes: list[dict[str, Any]]
    marks: list[VeridicalityMark]

    def files(self) -> dict[str, str]:
        """File name -> content, in the tagger/reasoner interchange formats."""
        from .serialize import dump_json

        return {
            "events.jsonl": dump_event_log(self.events),
            "mapping.json": dump_json(self.table.to_document()),
            "outcomes.json": dump_json(outcomes_to_document(self.outcomes)),
            "marks.json": dump_json(marks_to_document(self.marks)),
        }


def mapping_table(spec: GenSpec) -> MappingTable:
    doc = {
        "format_version": "1",
        "entries": {
            code: {
                "process_class": cls,
                "environment": ENVIRONMENT,
                "default_confidence": format_decimal(DEFAULT_CONFIDENCE),
                "vetting": {
                    "mode": "designed",
                    "environments": [ENVIRONMENT],
                    "requires_veridical_inputs": True,
                    "requires_warranted_inputs": False,
                },
            }
            for code, cls in spec.step_alphabet
        },
    }
    return MappingTable.from_document(doc)


def generate(spec: GenSpec) -> Generated:
    rng = LCG64(spec.seed)
    events: list[EventRecord] = []
    outcomes: list[dict[str, Any]] = []
    marks: list[VeridicalityMark] = []
    tick = 0
    for li in range(spec.n_loops):
        loop_id = f"L{li + 1:04d}"
        unit = f"U{li % spec.n_units + 1}"
        actor = f"analyst{li % spec.n_units + 1}"
        for it in range(spec.iterations_per_loop):
            n_steps = spec.min_steps + rng.below(spec.max_steps - spec.min_steps + 1)
            current = f"src:{loop_id}:{it}"
            score = spec.planted_intercept
            for k in range(n_steps):
                code, _ = spec.step_alphabet[rng.below(len(spec.step_alphabet))]
                out = f"art:{loop_id}:{it}:{k + 1}"
                # draw even at rate 0 so the stream does not depend on the rate
                bad = Decimal(repr(rng.uniform())) < spec.bad_source_rate
                if bad:
                    marks.append(VeridicalityMark(f"ice:{current}", "not_veridical"))
                tick += 1
                events.append(
                    EventRecord(
                        timestamp=format_instant(START + timedelta(minutes=tick)),
                        actor_id=actor,
                        activity_code=code,
                        loop_id=loop_id,
                        iteration=it,
                        inputs=(current,),
                        outputs=(out,),
                        unit=unit,
                    )
                )
                score += spec.planted_effects.get(code, Decimal(0))
                current = out
            if spec.noise_sd > 0:
                noise = Decimal(repr(rng.gauss())) * spec.noise_sd
                score = (score + noise).quantize(NOISE_QUANTUM)
            score = min(max(score, Decimal(0)), Decimal(1))
            outcomes.append({"loop_id": loop_id, "iteration": it, "score": canonical_decimal(score)})
    return Generated(events, mapping_table(spec), outcomes, marks)
