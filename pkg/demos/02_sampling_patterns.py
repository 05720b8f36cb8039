"""The two k-space subsampling schemes and their geometry.

Generates the rotating-spiral and shifted-EPI masks at the 224x224 /
771-samples operating point (compression 65) and reports their density
structure. Writes small PGM previews of the first frame next to this
script.

Run:  python3 demos/02_sampling_patterns.py
"""

from pathlib import Path

import numpy as np

from mrfrecon import epi_mask, spiral_mask, validate_mask

GRID = (224, 224)
FRAMES = 16  # enough to see the temporal variation
BUDGET = 771

out_dir = Path(__file__).parent


def preview(mask, path):
    w, h = mask.grid
    img = np.zeros((h, w), dtype=np.uint8)
    idx = mask.indices[0]
    # fftshift for display so DC sits in the middle
    img[(idx[:, 1] + h // 2) % h, (idx[:, 0] + w // 2) % w] = 255
    header = f"P5\n{w} {h}\n255\n".encode()
    path.write_bytes(header + img.tobytes())


for name, gen in (("spiral", spiral_mask), ("epi", epi_mask)):
    mask = gen(GRID, FRAMES, BUDGET)
    report = validate_mask(mask, expected_ratio=65.0)
    print(f"{name}: {mask.samples_per_frame} samples/frame, "
          f"compression {report.compression_ratio:.2f}, "
          f"violations: {report.violations or 'none'}")

    idx = mask.indices.reshape(-1, 2)
    cx = np.where(idx[:, 0] > GRID[0] // 2, idx[:, 0] - GRID[0], idx[:, 0])
    cy = np.where(idx[:, 1] > GRID[1] // 2, idx[:, 1] - GRID[1], idx[:, 1])
    r = np.hypot(cx, cy)
    in_center = np.sum((np.abs(cx) < 4) & (np.abs(cy) < 4)) / FRAMES
    print(f"  avg samples with |k| < 4 per frame: {in_center:.1f}; "
          f"radius span {r.min():.0f}..{r.max():.0f}")

    changed = sum(
        not np.array_equal(np.sort(mask.indices[k].ravel()),
                           np.sort(mask.indices[k + 1].ravel()))
        for k in range(FRAMES - 1)
    )
    print(f"  frames differing from their successor: {changed}/{FRAMES - 1}")
    preview(mask, out_dir / f"{name}_frame0.pgm")
    print(f"  wrote {name}_frame0.pgm")
