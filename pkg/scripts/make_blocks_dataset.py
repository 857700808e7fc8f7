#!/usr/bin/env python3
"""Generate the synthetic stacked-slab dataset used by the planted demo.

Class i consists of meshes with i+1 separated slabs, so class identity is
visible in any depth map as the number of distinct bands.
"""

import argparse

from pointzero.synth import make_blocks_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("root", help="output dataset root")
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--per-class", type=int, default=10)
    ap.add_argument("--split", default="test")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    root = make_blocks_dataset(
        args.root, n_classes=args.classes, per_class=args.per_class,
        split=args.split, seed=args.seed,
    )
    print(f"wrote {args.classes * args.per_class} meshes under {root}")


if __name__ == "__main__":
    main()
