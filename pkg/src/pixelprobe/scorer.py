"""Black-box scoring behind one batched interface.

Two backends: the built-in convolutional network, and an external child
process speaking newline-delimited JSON over stdin/stdout:

    request:  {"id": <uint>, "width": <uint>, "height": <uint>,
               "count": <uint>, "pixels": "<base64>"}
    response: {"id": <uint>, "scores": [<float>, ...]}

``pixels`` is count*width*height*3 bytes: the images concatenated, each
row-major RGB8. Replies must echo the request id and carry exactly
``count`` scores in input order; any deviation aborts the run.

Scoring is order-preserving and deterministic, and an image's score never
depends on what else shares its batch (the built-in backend evaluates
images one at a time internally, so batch composition cannot perturb
float accumulation).
"""

from __future__ import annotations

import base64
import json
import shlex
import subprocess
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ContractViolationError,
    ParameterError,
    ScorerProtocolError,
)
from .image import Image
from .network import NetworkWeights, forward_activations, load_weights

__all__ = ["ScorerSpec", "Scorer", "BuiltinScorer", "ExternalScorer", "open_scorer", "score_batch"]


@dataclass(frozen=True)
class ScorerSpec:
    """Description of a scoring function: built-in weights or a child command."""

    kind: str
    weights_source: str | None = None
    command: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind == "builtin":
            if not self.weights_source or self.command is not None:
                raise ParameterError("builtin spec needs weights_source and no command")
        elif self.kind == "external":
            if not self.command or self.weights_source is not None:
                raise ParameterError("external spec needs a command and no weights_source")
            object.__setattr__(self, "command", tuple(self.command))
        else:
            raise ParameterError(f"unknown scorer kind {self.kind!r}")

    @classmethod
    def builtin(cls, weights_source: str = "spotnet") -> "ScorerSpec":
        return cls(kind="builtin", weights_source=weights_source)

    @classmethod
    def external(cls, command: str | Sequence[str]) -> "ScorerSpec":
        if isinstance(command, str):
            command = tuple(shlex.split(command))
        return cls(kind="external", command=tuple(command))

    @property
    def scorer_id(self) -> str:
        if self.kind == "builtin":
            return f"builtin:{self.weights_source}"
        return "external:" + " ".join(shlex.quote(c) for c in self.command)


def _check_batch(images: Sequence[Image]) -> None:
    if not images:
        return
    w, h = images[0].width, images[0].height
    for img in images:
        if img.width != w or img.height != h:
            raise ParameterError(
                f"mixed image sizes in batch: {w}x{h} vs {img.width}x{img.height}"
            )


def _validate_scores(scores: np.ndarray, origin: str) -> np.ndarray:
    if not np.all(np.isfinite(scores)):
        raise ContractViolationError(f"{origin} returned non-finite score")
    if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
        raise ContractViolationError(
            f"{origin} returned score outside [0, 1]: "
            f"min={scores.min()!r} max={scores.max()!r}"
        )
    return scores


class Scorer:
    """Batched scoring session; use as a context manager."""

    scorer_id: str

    def score_batch(self, images: Sequence[Image]) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class BuiltinScorer(Scorer):
    """Pure in-process scorer; stateless and safe to share across threads."""

    def __init__(self, weights: NetworkWeights, scorer_id: str = "builtin:custom"):
        self.weights = weights
        self.scorer_id = scorer_id

    def score_batch(self, images: Sequence[Image]) -> np.ndarray:
        _check_batch(images)
        scores = np.empty(len(images), dtype=np.float64)
        for i, img in enumerate(images):
            scores[i] = forward_activations(self.weights, img)[3]
        return _validate_scores(scores, self.scorer_id)


class ExternalScorer(Scorer):
    """Serially-used session talking to one child scorer process."""

    def __init__(self, command: Sequence[str]):
        self.command = tuple(command)
        self.scorer_id = "external:" + " ".join(shlex.quote(c) for c in self.command)
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=False,
            )
        except OSError as e:
            raise ScorerProtocolError(f"cannot start scorer {self.scorer_id}: {e}") from e

    def score_batch(self, images: Sequence[Image]) -> np.ndarray:
        _check_batch(images)
        if not images:
            return np.empty(0, dtype=np.float64)
        if self._proc is None:
            raise ScorerProtocolError("scorer session already closed")
        req_id = self._next_id
        self._next_id += 1
        width, height = images[0].width, images[0].height
        raw = b"".join(img.pixels.tobytes() for img in images)
        request = {
            "id": req_id,
            "width": width,
            "height": height,
            "count": len(images),
            "pixels": base64.b64encode(raw).decode("ascii"),
        }
        try:
            self._proc.stdin.write(json.dumps(request).encode("ascii") + b"\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as e:
            self._abort()
            raise ScorerProtocolError(f"scorer process died: {e}") from e
        if not line:
            self._abort()
            raise ScorerProtocolError(
                f"scorer closed its output before replying (exit code "
                f"{self._proc.poll() if self._proc else 'unknown'})"
            )
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as e:
            self._abort()
            raise ScorerProtocolError(f"scorer sent a non-JSON line: {e}") from e
        if not isinstance(reply, dict) or reply.get("id") != req_id:
            self._abort()
            raise ScorerProtocolError(
                f"scorer reply id {reply.get('id')!r} does not match request id {req_id}"
            )
        scores = reply.get("scores")
        if not isinstance(scores, list) or len(scores) != len(images):
            self._abort()
            raise ScorerProtocolError(
                f"scorer returned {len(scores) if isinstance(scores, list) else 'no'} "
                f"scores for {len(images)} images"
            )
        try:
            arr = np.asarray(scores, dtype=np.float64)
        except (TypeError, ValueError) as e:
            self._abort()
            raise ScorerProtocolError(f"scorer returned non-numeric scores: {e}") from e
        return _validate_scores(arr, self.scorer_id)

    def _abort(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.kill()
        except OSError:
            pass
        proc.wait()

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


def open_scorer(spec: ScorerSpec) -> Scorer:
    """Build a scoring session for a spec; close it when done."""
    if spec.kind == "builtin":
        return BuiltinScorer(load_weights(spec.weights_source), spec.scorer_id)
    return ExternalScorer(spec.command)


def score_batch(spec: ScorerSpec, images: Sequence[Image]) -> np.ndarray:
    """One-shot batched scoring; opens and closes a session per call."""
    with open_scorer(spec) as scorer:
        return scorer.score_batch(images)
