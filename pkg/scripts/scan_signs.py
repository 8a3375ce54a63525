"""Count sign changes of a(t) over square-free t for each eigenform of a given weight."""

import argparse

from halfsign.dirichlet import sign_changes, verify_pairs
from halfsign.qspace import eigenbasis


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--weight", type=int, default=9)
    p.add_argument("--order", type=int, default=10_000)
    p.add_argument("--limits", default="100,1000,10000")
    args = p.parse_args()
    limits = [int(x) for x in args.limits.split(",")]
    for i, form in enumerate(eigenbasis(args.weight, args.order)):
        for T in limits:
            if T > args.order:
                print(f"form {i}: T={T} exceeds order {args.order}, skipped")
                continue
            rep = sign_changes(form, T)
            print(f"form {i}: T={T:>6}  changes={rep.count:>5}  zeros={rep.zero_count:>4}  verified={verify_pairs(form, rep)}")


if __name__ == "__main__":
    main()
