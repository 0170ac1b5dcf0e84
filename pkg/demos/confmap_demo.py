"""Brute-force confidence map and the stride-2 checkerboard.

Enumerates every color of a quantized grid at every pixel of a small
dark-spot image, reduces the scores to per-pixel min/max/avg, and renders
the swing (max - min) as a heatmap PNG. The even-coordinate lattice
carries all the attack leverage: stride-2 convolutions never sample odd
pixels as window centers.

Run:  python demos/confmap_demo.py
"""

from pixelprobe import (
    ScorerSpec,
    checkerboard_score,
    color_grid,
    compute_confidence_map,
    save_image,
    save_map,
    spot_image,
    vector_count,
)
from pixelprobe.render import render_map

image = spot_image(size=32, radius=6)
colors = color_grid(51)
spec = ScorerSpec.builtin("spotnet")

print(f"enumerating {vector_count(colors, image.width, image.height)} attack vectors "
      f"({len(colors)} colors per pixel)")
cmap = compute_confidence_map(
    image, spec, colors,
    progress=lambda done, total: print(f"\r{done}/{total} pixels", end="", flush=True),
)
print()

swing = cmap.swing()
print(f"original score        {cmap.original_score:.4f}")
print(f"strongest minimize    {cmap.min_map.min():.4f}")
print(f"strongest maximize    {cmap.max_map.max():.4f}")
print(f"max swing             {swing.max():.4f}")
print(f"checkerboard score    {checkerboard_score(cmap):.3f}  (> 0 means even-even bias)")

save_map(cmap, "demo_map.opcm")
save_image(render_map(cmap, "swing", scale=8), "demo_swing.png")
save_image(render_map(cmap, "min", scale=8), "demo_min.png")
print("wrote demo_map.opcm, demo_swing.png, demo_min.png")
