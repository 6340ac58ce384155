#!/usr/bin/env python3
"""Generate seeded demo datasets as LGT files for the CLI walkthrough.

Writes a real set plus three pseudo-generated sets of decreasing quality
(uniform noise at two levels, and a mixed-quality set whose samples span the
whole score range).
"""

import argparse
from pathlib import Path

from lgsqe import save_raw_tensor, stroke_images
from lgsqe.datasets import ImageSet
from lgsqe.synthetic import gaussian_degrade, mixed_quality_degrade


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="demo_data")
    parser.add_argument("--count", type=int, default=1200)
    parser.add_argument("--side", type=int, default=28)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noise-floor", type=float, default=0.04)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    real = stroke_images(args.count, side=args.side, seed=args.seed, noise=args.noise_floor)
    base = ImageSet(
        stroke_images(args.count, side=args.side, seed=args.seed + 1, noise=args.noise_floor).pixels,
        "real",
    )
    datasets = {
        "real.lgt": real,
        "gen_sigma030.lgt": gaussian_degrade(base, 0.30, seed=args.seed + 2),
        "gen_sigma010.lgt": gaussian_degrade(base, 0.10, seed=args.seed + 3),
        "gen_mixed.lgt": mixed_quality_degrade(base, 0.08, seed=args.seed + 4),
    }
    for name, images in datasets.items():
        path = out / name
        save_raw_tensor(images, path)
        print(f"wrote {path} ({images.count} images, {images.side}x{images.side}, {images.provenance})")


if __name__ == "__main__":
    main()
