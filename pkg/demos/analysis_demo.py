"""Chromatic, spatial, and parity analysis over a batch of attacks.

Attacks a population of seeded noise images, then runs the record
analyses: color distance vs score movement, coordinate statistics,
placement counts, and the parity report.

Run:  python demos/analysis_demo.py
"""

from pixelprobe import (
    DEConfig,
    Direction,
    ScorerSpec,
    chromatic_scatter,
    open_scorer,
    parity_analysis,
    placement_heatmap,
    run_attack,
    spatial_stats,
)
from pixelprobe.analysis import (
    SPATIAL_VARIABLES,
    write_chromatic_csv,
    write_parity_csv,
    write_placement_csv,
    write_spatial_csv,
)
from pixelprobe.synthetic import random_image

spec = ScorerSpec.builtin("random:2718")
config = lambda i: DEConfig(population_size=24, generations=15, seed=i)

records = []
with open_scorer(spec) as scorer:
    for i in range(24):
        image = random_image(16, 16, seed=9000 + i)
        records.append(
            run_attack(image, scorer, Direction.MINIMIZE, config(i), image_id=f"noise{i}")
        )
print(f"attacked {len(records)} images")

points = chromatic_scatter(records)
biggest = max(points, key=lambda p: abs(p.delta))
print(f"largest score drop {biggest.delta:+.4f} at color distance h={biggest.h:.3f}")

stats = spatial_stats(records)
header = "          " + "".join(f"{v:>9}" for v in SPATIAL_VARIABLES)
print(header)
for label, row in (("mean", stats.mean), ("median", stats.median), ("sd", stats.sd)):
    print(f"{label:>8}  " + "".join(f"{row[v]:>9.2f}" for v in SPATIAL_VARIABLES))

parity = parity_analysis(records)
print("parity fractions:", {k: round(v, 3) for k, v in parity.fractions.items()})

write_chromatic_csv(points, "demo_chromatic.csv")
write_spatial_csv(stats, "demo_spatial.csv")
write_parity_csv(parity, "demo_parity.csv")
write_placement_csv(placement_heatmap(records, 16, 16), "demo_placement.csv")
print("wrote demo_chromatic.csv, demo_spatial.csv, demo_parity.csv, demo_placement.csv")
