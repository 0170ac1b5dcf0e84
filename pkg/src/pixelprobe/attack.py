"""Differential-evolution one-pixel attack (DE/rand/1/bin).

Candidates are 5-dimensional real vectors (x, y, r, g, b) evolved with
random-base mutation ``v = a + F*(b - c)`` and binomial crossover; genes
are clamped to bounds and rounded to integers (optionally snapped to a
quantized color grid) only at evaluation time. Per generation, every
trial candidate is scored in a single batch.

All randomness comes from one SplitMix64 stream seeded by the config.
Draw order, for replayability: initial population (member-major, genes
x, y, r, g, b, one uniform each); then per generation and member, the
three partner indices (rejection-sampled to be distinct from the target
and each other), the forced crossover gene, and five crossover uniforms.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError
from .image import AttackVector, ColorSet, Image, apply_attack, neighborhood_mean
from .rng import SplitMix64
from .scorer import Scorer, ScorerSpec, open_scorer

__all__ = [
    "Direction",
    "DEConfig",
    "AttackRecord",
    "run_attack",
    "is_success",
    "write_records",
    "read_records",
]


class Direction(enum.Enum):
    """Attack goal: drive the score down (minimize) or up (maximize)."""

    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"

    def improves(self, new: float, old: float) -> bool:
        return new < old if self is Direction.MINIMIZE else new > old

    def crossed(self, score: float, threshold: float) -> bool:
        return score < threshold if self is Direction.MINIMIZE else score > threshold


@dataclass(frozen=True)
class DEConfig:
    """Differential evolution hyperparameters.

    Defaults follow common one-pixel-attack practice for small search
    dimensions; every run is fully determined by the seed.
    """

    population_size: int = 200
    generations: int = 100
    differential_weight: float = 0.5
    crossover_rate: float = 0.8
    seed: int = 0
    early_stop_threshold: float | None = None

    def __post_init__(self):
        if self.population_size < 4:
            raise ParameterError(
                f"population_size must be >= 4, got {self.population_size}"
            )
        if self.generations < 0:
            raise ParameterError(f"generations must be >= 0, got {self.generations}")
        if not (0.0 < self.differential_weight <= 2.0):
            raise ParameterError(
                f"differential_weight must be in (0, 2], got {self.differential_weight}"
            )
        if not (0.0 <= self.crossover_rate <= 1.0):
            raise ParameterError(
                f"crossover_rate must be in [0, 1], got {self.crossover_rate}"
            )


@dataclass(frozen=True)
class AttackRecord:
    """Provenance of one completed attack."""

    image_id: str
    direction: Direction
    original_score: float
    modified_score: float
    vector: AttackVector
    neighborhood_mean: tuple[float, float, float]
    generations_used: int
    seed: int

    def __post_init__(self):
        for name in ("original_score", "modified_score"):
            s = getattr(self, name)
            if not (0.0 <= s <= 1.0):
                raise ParameterError(f"{name} must be in [0, 1], got {s}")
        if self.direction is Direction.MINIMIZE:
            if self.modified_score > self.original_score:
                raise ParameterError("minimize record with modified > original")
        elif self.modified_score < self.original_score:
            raise ParameterError("maximize record with modified < original")
        object.__setattr__(
            self, "neighborhood_mean", tuple(float(c) for c in self.neighborhood_mean)
        )


def is_success(
    record: AttackRecord, min_threshold: float = 0.9, max_threshold: float = 0.1
) -> bool:
    """Did the attack cross the success threshold for its direction?

    A minimize attack succeeds when it pulls a score that started at or
    above ``min_threshold`` below it; a maximize attack succeeds when it
    pushes a score that started at or below ``max_threshold`` above it.
    """
    if record.direction is Direction.MINIMIZE:
        return (
            record.original_score >= min_threshold
            and record.modified_score < min_threshold
        )
    return (
        record.original_score <= max_threshold
        and record.modified_score > max_threshold
    )


def _decode(genes: np.ndarray, hi: np.ndarray, colors: ColorSet | None) -> AttackVector:
    """Clamp to bounds, then round to integers (colors snap to the grid)."""
    vals = np.clip(genes, 0.0, hi)
    x = round(float(vals[0]))
    y = round(float(vals[1]))
    if colors is None:
        rgb = [round(float(v)) for v in vals[2:]]
    else:
        step = colors.step
        top = int(colors.values[-1])
        rgb = [min(round(float(v) / step) * step, top) for v in vals[2:]]
    return AttackVector(x, y, rgb[0], rgb[1], rgb[2])


def run_attack(
    image: Image,
    spec: ScorerSpec | Scorer,
    direction: Direction,
    config: DEConfig,
    *,
    colors: ColorSet | None = None,
    image_id: str = "",
    neighborhood_radius: int = 1,
    on_generation=None,
) -> AttackRecord:
    """Search for the strongest single-pixel perturbation of ``image``.

    Returns the best candidate found across the whole run (the baseline
    and initial population included). If nothing beats the unperturbed
    baseline, the record carries an identity perturbation (the best
    candidate's pixel with its original color) so the returned score
    never regresses from the baseline. ``on_generation(gen, best_score)``
    is invoked after each generation's selection.
    """
    if isinstance(spec, ScorerSpec):
        with open_scorer(spec) as scorer:
            return run_attack(
                image,
                scorer,
                direction,
                config,
                colors=colors,
                image_id=image_id,
                neighborhood_radius=neighborhood_radius,
                on_generation=on_generation,
            )
    scorer = spec

    np_size = config.population_size
    rng = SplitMix64(config.seed)
    hi = np.array(
        [image.width - 1, image.height - 1, 255, 255, 255], dtype=np.float64
    )

    population = np.empty((np_size, 5), dtype=np.float64)
    for i in range(np_size):
        for j in range(5):
            population[i, j] = rng.uniform() * hi[j]

    def evaluate(candidates: list[np.ndarray], include_base: bool):
        vectors = [_decode(c, hi, colors) for c in candidates]
        batch = [apply_attack(image, v) for v in vectors]
        if include_base:
            batch.insert(0, image)
        scores = scorer.score_batch(batch)
        if include_base:
            return vectors, scores[1:], float(scores[0])
        return vectors, scores, None

    vectors, pop_scores, original_score = evaluate(list(population), include_base=True)
    pop_scores = np.array(pop_scores)

    # best candidate ever evaluated (ties keep the earliest)
    cand_score = float(pop_scores[0])
    cand_vector = vectors[0]
    for vec, s in zip(vectors[1:], pop_scores[1:]):
        if direction.improves(float(s), cand_score):
            cand_score, cand_vector = float(s), vec

    def effective_best() -> float:
        return cand_score if direction.improves(cand_score, original_score) else original_score

    generations_used = 0
    threshold = config.early_stop_threshold
    stopped = threshold is not None and direction.crossed(effective_best(), threshold)

    F = config.differential_weight
    CR = config.crossover_rate
    if not stopped:
        for gen in range(1, config.generations + 1):
            trials = []
            for i in range(np_size):
                a = rng.below(np_size)
                while a == i:
                    a = rng.below(np_size)
                b = rng.below(np_size)
                while b in (i, a):
                    b = rng.below(np_size)
                c = rng.below(np_size)
                while c in (i, a, b):
                    c = rng.below(np_size)
                mutant = population[a] + F * (population[b] - population[c])
                forced = rng.below(5)
                trial = population[i].copy()
                for j in range(5):
                    if rng.uniform() < CR or j == forced:
                        trial[j] = mutant[j]
                trials.append(trial)

            trial_vectors, trial_scores, _ = evaluate(trials, include_base=False)
            for i in range(np_size):
                s = float(trial_scores[i])
                if not direction.improves(pop_scores[i], s):  # trial not worse
                    population[i] = trials[i]
                    pop_scores[i] = s
                if direction.improves(s, cand_score):
                    cand_score, cand_vector = s, trial_vectors[i]
            generations_used = gen
            if on_generation is not None:
                on_generation(gen, effective_best())
            if threshold is not None and direction.crossed(effective_best(), threshold):
                break

    if direction.improves(cand_score, original_score):
        best_vector, best_score = cand_vector, cand_score
    else:
        # nothing beat the baseline: identity perturbation at the most
        # promising pixel seen keeps the record's score at the baseline
        best_vector = AttackVector(
            cand_vector.x, cand_vector.y, *image.pixel(cand_vector.x, cand_vector.y)
        )
        best_score = original_score

    return AttackRecord(
        image_id=image_id,
        direction=direction,
        original_score=original_score,
        modified_score=best_score,
        vector=best_vector,
        neighborhood_mean=neighborhood_mean(
            image, best_vector.x, best_vector.y, neighborhood_radius
        ),
        generations_used=generations_used,
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# JSONL record streams
# ---------------------------------------------------------------------------

_RECORD_KEYS = (
    "image_id",
    "direction",
    "original_score",
    "modified_score",
    "x",
    "y",
    "r",
    "g",
    "b",
    "neighborhood_mean",
    "generations_used",
    "seed",
)


def record_to_json(record: AttackRecord) -> str:
    v = record.vector
    return json.dumps(
        {
            "image_id": record.image_id,
            "direction": record.direction.value,
            "original_score": record.original_score,
            "modified_score": record.modified_score,
            "x": v.x,
            "y": v.y,
            "r": v.r,
            "g": v.g,
            "b": v.b,
            "neighborhood_mean": list(record.neighborhood_mean),
            "generations_used": record.generations_used,
            "seed": record.seed,
        }
    )


def record_from_json(obj: dict) -> AttackRecord:
    missing = [k for k in _RECORD_KEYS if k not in obj]
    if missing:
        raise FormatError(f"record missing fields: {', '.join(missing)}")
    try:
        direction = Direction(obj["direction"])
    except ValueError as e:
        raise FormatError(f"unknown direction {obj['direction']!r}") from e
    try:
        return AttackRecord(
            image_id=str(obj["image_id"]),
            direction=direction,
            original_score=float(obj["original_score"]),
            modified_score=float(obj["modified_score"]),
            vector=AttackVector(
                int(obj["x"]), int(obj["y"]), int(obj["r"]), int(obj["g"]), int(obj["b"])
            ),
            neighborhood_mean=tuple(float(c) for c in obj["neighborhood_mean"]),
            generations_used=int(obj["generations_used"]),
            seed=int(obj["seed"]),
        )
    except (TypeError, ValueError, ParameterError) as e:
        raise FormatError(f"malformed record: {e}") from e


def write_records(records, path) -> None:
    """Write records as JSONL, one object per line."""
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(record_to_json(record))
            f.write("\n")


def read_records(path) -> list[AttackRecord]:
    """Read a JSONL record stream; errors carry the offending line number."""
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{lineno}: not valid JSON: {e}") from e
            try:
                records.append(record_from_json(obj))
            except FormatError as e:
                raise FormatError(f"{path}:{lineno}: {e}") from e
    return records
