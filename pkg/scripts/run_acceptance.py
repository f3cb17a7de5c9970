"""Run the acceptance criteria and print one line per criterion.

    python3 scripts/run_acceptance.py [--filter NAME] [--seed N]
"""
import argparse
import sys

from hamlab import acceptance


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--filter", default=None)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    results = acceptance.run(args.filter, seed=args.seed, on_result=lambda r: print(r.line(), flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed in {sum(r.seconds for r in results):.1f}s")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
