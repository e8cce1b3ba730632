"""Randomized cutoff and maximum-principle suites at full size."""

import argparse

from stripwave.artifacts import resolve_output_dir, write_json
from stripwave.potential import ProductWell
from stripwave.suites import cutoff_suite, max_principle_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--mp-trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    P = ProductWell()
    cut = cutoff_suite(P, args.trials, 50, seed=args.seed, workers=args.workers).to_dict()
    for name, b in cut["branches"].items():
        print(f"cutoff {name:8s} trials={b['trials']:4d} passed={b['passed']} "
              f"min dJ={b['min_energy_decrease']}")
    mp = []
    for h in (1 / 16, 1 / 32):
        rep = max_principle_suite(P, args.mp_trials, h=h, seed=args.seed,
                                  workers=args.workers).to_dict()
        mp.append(rep)
        print(f"max principle h=1/{round(1 / h)} failures={rep['failures']} "
              f"max sup={rep['max_sup']:.4f} bound={rep['r'] + rep['tol']:.4f} "
              f"({rep['wall_time_s']:.1f}s)")
    out = resolve_output_dir(args.out)
    write_json(out / "suites.json", {"cutoff": cut, "max_principle": mp})
    return 0 if cut["passed"] and all(r["passed"] for r in mp) else 4


if __name__ == "__main__":
    raise SystemExit(main())
