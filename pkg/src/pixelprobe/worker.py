"""Reference external scorer: serves the built-in network over stdio.

Run as ``python -m pixelprobe.worker [--weights SOURCE]``. Speaks the
newline-JSON protocol documented in :mod:`pixelprobe.scorer`, one reply
line per request line, until stdin closes. Scores are identical to the
in-process builtin scorer for the same weights source.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys

import numpy as np

from .image import Image
from .network import forward_activations, load_weights


def serve(weights_source: str, stdin=None, stdout=None) -> int:
    weights = load_weights(weights_source)
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            width = int(request["width"])
            height = int(request["height"])
            count = int(request["count"])
            raw = base64.b64decode(request["pixels"])
        except (ValueError, KeyError, TypeError) as e:
            print(f"worker: bad request line: {e}", file=sys.stderr)
            return 1
        expected = count * width * height * 3
        if len(raw) != expected:
            print(
                f"worker: payload is {len(raw)} bytes, expected {expected}",
                file=sys.stderr,
            )
            return 1
        batch = np.frombuffer(raw, dtype=np.uint8).reshape(count, height, width, 3)
        scores = [forward_activations(weights, Image(batch[i]))[3] for i in range(count)]
        reply = {"id": request["id"], "scores": scores}
        stdout.write(json.dumps(reply).encode("ascii") + b"\n")
        stdout.flush()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pixelprobe-worker", description=__doc__.splitlines()[0]
    )
    parser.add_argument(
        "--weights",
        default="spotnet",
        help="weights preset or file for the served network (default: spotnet)",
    )
    args = parser.parse_args(argv)
    return serve(args.weights)


if __name__ == "__main__":
    sys.exit(main())
