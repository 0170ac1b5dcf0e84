"""Command-line front end.

Subcommands: attack, confmap, analyze, render, scorer-check. Options can
come from flags or an optional key=value config file (flags win); the
PIXELPROBE_SEED environment variable overrides the seed from both.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 scorer-protocol
error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import analysis
from .attack import DEConfig, Direction, is_success, read_records, record_to_json, run_attack
from .confmap import (
    MapComputationError,
    compute_confidence_map,
    export_map_csv,
    load_map,
    save_map,
    vector_count,
)
from .errors import (
    ConfigurationError,
    ContractViolationError,
    DataError,
    EmptyCollectionError,
    FormatError,
    ImageIOError,
    ParameterError,
    PixelProbeError,
    ScorerProtocolError,
)
from .image import color_grid, load_image, save_image
from .render import render_counts, render_map
from .scorer import ExternalScorer, ScorerSpec, open_scorer
from .synthetic import random_image, uniform_image

SEED_ENV = "PIXELPROBE_SEED"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SCORER = 3

# every option a config file may set (either - or _ spelling works there)
CONFIG_KEYS = {
    "scorer",
    "external-scorer",
    "color-step",
    "seed",
    "population",
    "generations",
    "differential-weight",
    "crossover-rate",
    "early-stop",
    "direction",
    "radius",
    "min-threshold",
    "max-threshold",
    "workers",
    "batch-size",
    "checkpoint-every",
    "scale",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ImageIOError(f"{path}: cannot read config file: {e}") from e
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip().replace("_", "-")
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip().strip("\"'")
    return values


class _Options:
    """Flag-over-file option resolution; env var overrides the seed."""

    def __init__(self, args):
        self.args = args
        self.file = _read_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, key: str, default=None, cast=str):
        flag = getattr(self.args, key.replace("-", "_"), None)
        if flag is not None:
            return flag
        if key in self.file:
            try:
                return cast(self.file[key])
            except ValueError as e:
                raise ConfigurationError(f"config key {key}: {e}") from e
        return default

    def seed(self, default: int = 0) -> int:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                return int(env, 0)
            except ValueError as e:
                raise ConfigurationError(f"{SEED_ENV}={env!r} is not an integer") from e
        return self.get("seed", default, int)

    def scorer_spec(self) -> ScorerSpec:
        external = self.get("external-scorer")
        builtin = self.get("scorer")
        if external is not None and builtin is not None:
            raise ConfigurationError("give either --scorer or --external-scorer, not both")
        if external is not None:
            return ScorerSpec.external(external)
        return ScorerSpec.builtin(builtin if builtin is not None else "spotnet")


def _add_config_flag(p):
    p.add_argument("--config", metavar="FILE",
                   help="key=value config file; flags given explicitly win")


def _add_scorer_flags(p):
    p.add_argument("--scorer", metavar="SOURCE",
                   help="builtin weights: preset (spotnet, random:<seed>) or file "
                        "(default: spotnet)")
    p.add_argument("--external-scorer", metavar="CMD",
                   help="external scorer command line (newline-JSON protocol)")


def build_parser() -> _Parser:
    parser = _Parser(prog="pixelprobe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="run one-pixel DE attacks over images")
    _add_config_flag(p_attack)
    _add_scorer_flags(p_attack)
    p_attack.add_argument("images", nargs="+", metavar="IMAGE")
    p_attack.add_argument("--out", required=True, metavar="JSONL",
                          help="output records file (one JSON object per image)")
    p_attack.add_argument("--direction", choices=["minimize", "maximize"])
    p_attack.add_argument("--seed", type=int,
                          help="base seed; image i uses seed+i (env "
                               f"{SEED_ENV} overrides)")
    p_attack.add_argument("--population", type=int)
    p_attack.add_argument("--generations", type=int)
    p_attack.add_argument("--differential-weight", type=float)
    p_attack.add_argument("--crossover-rate", type=float)
    p_attack.add_argument("--early-stop", type=float,
                          help="stop once the best score crosses this value")
    p_attack.add_argument("--color-step", type=int,
                          help="snap attack colors to this quantization grid")
    p_attack.add_argument("--radius", type=int,
                          help="neighborhood radius recorded per attack (default 1)")
    p_attack.set_defaults(func=cmd_attack)

    p_conf = sub.add_parser("confmap", help="brute-force a one-pixel confidence map")
    _add_config_flag(p_conf)
    _add_scorer_flags(p_conf)
    p_conf.add_argument("image", metavar="IMAGE")
    p_conf.add_argument("--out", required=True, metavar="OPCM")
    p_conf.add_argument("--csv", metavar="CSV", help="also export per-pixel CSV")
    p_conf.add_argument("--color-step", type=int, help="color grid step (default 51)")
    p_conf.add_argument("--batch-size", type=int)
    p_conf.add_argument("--workers", type=int)
    p_conf.add_argument("--checkpoint", metavar="FILE",
                        help="checkpoint file (default: OUT.ckpt)")
    p_conf.add_argument("--checkpoint-every", type=int, metavar="PIXELS")
    p_conf.add_argument("--resume", action="store_true",
                        help="resume from an existing checkpoint")
    p_conf.add_argument("--quiet", action="store_true")
    p_conf.set_defaults(func=cmd_confmap)

    p_an = sub.add_parser("analyze", help="analyze attack records or a map")
    _add_config_flag(p_an)
    p_an.add_argument("--which", required=True,
                      choices=["chromatic", "spatial", "parity", "placement", "checkerboard"])
    p_an.add_argument("--records", metavar="JSONL")
    p_an.add_argument("--map", dest="map_path", metavar="OPCM")
    p_an.add_argument("--out", metavar="CSV")
    p_an.add_argument("--width", type=int, default=64)
    p_an.add_argument("--height", type=int, default=64)
    p_an.add_argument("--success-only", action="store_true",
                      help="keep only records passing the success thresholds")
    p_an.add_argument("--min-threshold", type=float)
    p_an.add_argument("--max-threshold", type=float)
    p_an.set_defaults(func=cmd_analyze)

    p_render = sub.add_parser("render", help="render a map or placement grid as PNG")
    _add_config_flag(p_render)
    p_render.add_argument("input", metavar="FILE", help="OPCM map, or x,y,count CSV for counts")
    p_render.add_argument("--out", required=True, metavar="PNG")
    p_render.add_argument("--mode", required=True,
                          choices=["min", "max", "avg", "swing", "counts"])
    p_render.add_argument("--scale", type=int, help="integer upscale factor")
    p_render.add_argument("--range", dest="value_range", metavar="LO,HI",
                          help="fixed normalization range for comparable images")
    p_render.set_defaults(func=cmd_render)

    p_check = sub.add_parser("scorer-check",
                             help="validate an external scorer against the wire protocol")
    p_check.add_argument("--external-scorer", required=True, metavar="CMD")
    p_check.set_defaults(func=cmd_scorer_check)

    return parser


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_attack(args) -> int:
    opts = _Options(args)
    spec = opts.scorer_spec()
    direction = Direction(opts.get("direction", "minimize"))
    base_seed = opts.seed(0)
    step = opts.get("color-step", None, int)
    colors = color_grid(step) if step is not None else None
    radius = opts.get("radius", 1, int)
    config_for = lambda i: DEConfig(
        population_size=opts.get("population", 200, int),
        generations=opts.get("generations", 100, int),
        differential_weight=opts.get("differential-weight", 0.5, float),
        crossover_rate=opts.get("crossover-rate", 0.8, float),
        seed=base_seed + i,
        early_stop_threshold=opts.get("early-stop", None, float),
    )

    failures = []
    with open_scorer(spec) as scorer, open(args.out, "w", encoding="utf-8") as out:
        for i, path in enumerate(args.images):
            try:
                image = load_image(path)
                record = run_attack(
                    image,
                    scorer,
                    direction,
                    config_for(i),
                    colors=colors,
                    image_id=Path(path).stem,
                    neighborhood_radius=radius,
                )
            except ImageIOError as e:
                failures.append((path, str(e)))
                print(f"error: {e}", file=sys.stderr)
                continue
            out.write(record_to_json(record) + "\n")
            out.flush()
            marker = "success" if is_success(record) else "no-success"
            print(
                f"{path}: {record.original_score:.5f} -> {record.modified_score:.5f} "
                f"at ({record.vector.x},{record.vector.y}) [{marker}]"
            )
    if failures:
        print(f"{len(failures)} image(s) failed", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_confmap(args) -> int:
    opts = _Options(args)
    spec = opts.scorer_spec()
    step = opts.get("color-step", 51, int)
    colorset = color_grid(step)
    image = load_image(args.image)
    planned = vector_count(colorset, image.width, image.height)
    print(
        f"planning {planned} attack vectors "
        f"({image.width}x{image.height} pixels x {len(colorset)} colors)"
    )
    checkpoint = args.checkpoint if args.checkpoint else args.out + ".ckpt"

    def progress(done, total):
        if not args.quiet:
            print(f"\r{done}/{total} pixels", end="", file=sys.stderr, flush=True)

    try:
        cmap = compute_confidence_map(
            image,
            spec,
            colorset,
            batch_size=opts.get("batch-size", 4096, int),
            workers=opts.get("workers", 1, int),
            checkpoint_path=checkpoint,
            checkpoint_every=opts.get("checkpoint-every", 64, int),
            resume=args.resume,
            progress=progress,
        )
    finally:
        if not args.quiet:
            print(file=sys.stderr)
    save_map(cmap, args.out)
    if args.csv:
        export_map_csv(cmap, args.csv)
    if os.path.exists(checkpoint):
        os.remove(checkpoint)
    print(f"map written to {args.out}")
    return EXIT_OK


def _load_filtered_records(args, opts) -> list:
    if not args.records:
        raise ParameterError("this analysis needs --records")
    records = read_records(args.records)
    if args.success_only:
        mn = opts.get("min-threshold", 0.9, float)
        mx = opts.get("max-threshold", 0.1, float)
        records = [r for r in records if is_success(r, mn, mx)]
    return records


def cmd_analyze(args) -> int:
    opts = _Options(args)
    which = args.which
    if which == "checkerboard":
        if not args.map_path:
            raise ParameterError("checkerboard analysis needs --map")
        score = analysis.checkerboard_score(load_map(args.map_path))
        print(f"checkerboard_score,{score!r}")
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                f.write("metric,value\n")
                f.write(f"checkerboard_score,{score!r}\n")
        return EXIT_OK

    if not args.out:
        raise ParameterError("this analysis needs --out")
    records = _load_filtered_records(args, opts)
    if which == "chromatic":
        analysis.write_chromatic_csv(analysis.chromatic_scatter(records), args.out)
    elif which == "spatial":
        analysis.write_spatial_csv(analysis.spatial_stats(records), args.out)
    elif which == "parity":
        analysis.write_parity_csv(analysis.parity_analysis(records), args.out)
    elif which == "placement":
        grid = analysis.placement_heatmap(records, args.width, args.height)
        analysis.write_placement_csv(grid, args.out)
    print(f"{which} analysis written to {args.out}")
    return EXIT_OK


def cmd_render(args) -> int:
    opts = _Options(args)
    scale = opts.get("scale", 1, int)
    value_range = None
    if args.value_range:
        parts = args.value_range.split(",")
        if len(parts) != 2:
            raise ParameterError(f"--range expects LO,HI, got {args.value_range!r}")
        try:
            value_range = (float(parts[0]), float(parts[1]))
        except ValueError as e:
            raise ParameterError(f"--range expects numbers: {e}") from e
    if args.mode == "counts":
        grid = analysis.read_placement_csv(args.input)
        img = render_counts(grid, value_range=value_range, scale=scale)
    else:
        img = render_map(load_map(args.input), args.mode, value_range=value_range, scale=scale)
    save_image(img, args.out)
    print(f"rendered {args.mode} to {args.out}")
    return EXIT_OK


def cmd_scorer_check(args) -> int:
    spec = ScorerSpec.external(args.external_scorer)
    probe = [
        uniform_image(8, 0),
        uniform_image(8, 255),
        uniform_image(8, 128),
        random_image(8, 8, seed=0xC0FFEE),
    ]
    scorer = ExternalScorer(spec.command)
    try:
        first = scorer.score_batch(probe)
        second = scorer.score_batch(probe)
    finally:
        scorer.close()
    if first.tolist() != second.tolist():
        print("scorer-check: FAILED: scorer is not deterministic", file=sys.stderr)
        print(f"  first:  {first.tolist()}", file=sys.stderr)
        print(f"  second: {second.tolist()}", file=sys.stderr)
        return EXIT_SCORER
    print(f"probe scores: {first.tolist()}")
    print("scorer-check: ok (protocol, score range, determinism)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (ParameterError, ConfigurationError) as e:
        print(f"pixelprobe: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MapComputationError as e:
        print(f"pixelprobe: error: {e}", file=sys.stderr)
        scorer_fault = isinstance(
            e.__cause__, (ScorerProtocolError, ContractViolationError)
        )
        return EXIT_SCORER if scorer_fault else EXIT_IO
    except (ScorerProtocolError, ContractViolationError) as e:
        print(f"pixelprobe: error: {e}", file=sys.stderr)
        return EXIT_SCORER
    except (ImageIOError, FormatError, DataError, EmptyCollectionError) as e:
        print(f"pixelprobe: error: {e}", file=sys.stderr)
        return EXIT_IO
    except PixelProbeError as e:
        print(f"pixelprobe: error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"pixelprobe: error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
