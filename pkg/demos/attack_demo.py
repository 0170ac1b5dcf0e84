"""One-pixel attacks against the built-in dark-spot detector.

Builds a synthetic stimulus the scorer was designed around (a dark blob
on a light background), then attacks it in both directions with
differential evolution and prints what the search found.

Run:  python demos/attack_demo.py
"""

from pixelprobe import (
    DEConfig,
    Direction,
    ScorerSpec,
    is_success,
    open_scorer,
    run_attack,
    spot_image,
    uniform_image,
    write_records,
)

spec = ScorerSpec.builtin("spotnet")
config = DEConfig(population_size=64, generations=40, seed=2024)

records = []
with open_scorer(spec) as scorer:
    # The detector fires on the blob; a minimize attack tries to silence it
    # with a single pixel. The interesting part is *where* the search lands:
    # the winning pixels sit at the blob center, on the even-even lattice.
    blob = spot_image()
    rec = run_attack(blob, scorer, Direction.MINIMIZE, config, image_id="blob")
    records.append(rec)
    print(f"minimize on blob:    {rec.original_score:.4f} -> {rec.modified_score:.4f}")
    print(f"  pixel ({rec.vector.x},{rec.vector.y}) "
          f"color {rec.vector.color()}  success={is_success(rec)}")

    # The uniform image gives a maximize attack nothing to amplify: one dark
    # pixel is not an extended dark region, so the score cannot cross 0.5.
    flat = uniform_image()
    rec = run_attack(flat, scorer, Direction.MAXIMIZE, config, image_id="flat")
    records.append(rec)
    print(f"maximize on uniform: {rec.original_score:.4f} -> {rec.modified_score:.4f}")
    print(f"  pixel ({rec.vector.x},{rec.vector.y}) "
          f"color {rec.vector.color()}  success={is_success(rec)}")

write_records(records, "demo_records.jsonl")
print("records written to demo_records.jsonl")
