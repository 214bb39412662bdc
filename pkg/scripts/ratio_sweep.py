"""Adapted test perplexity as the low-resource share grows.

    python3 scripts/ratio_sweep.py --seeds 1 2 3
"""

import argparse

from dialaug.experiment import (DOMAINS, SyntheticWorld, inversions, make_template_spec,
                                median_curve, ratio_sweep)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--target", default="ecommerce", choices=DOMAINS)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--pool", type=int, default=200, help="low-resource sample size (100%%)")
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.3, 0.4, 1.0])
    args = ap.parse_args()

    spec = make_template_spec()
    curves = []
    for seed in args.seeds:
        world = SyntheticWorld(spec, args.target, seed)
        curve = ratio_sweep(world, world.lowres_pool(args.pool), args.ratios, seed)
        curves.append(curve)
        print(f"seed {seed}: " + " ".join(f"{v:8.2f}" for v in curve))
    med = median_curve(curves)
    print("ratios: " + " ".join(f"{r:8.2f}" for r in args.ratios))
    print("median: " + " ".join(f"{v:8.2f}" for v in med))
    print(f"inversions: {inversions(med)}")


if __name__ == "__main__":
    main()
