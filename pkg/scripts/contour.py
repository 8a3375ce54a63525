"""Compare the smoothed square-free sum with its Mellin contour integral."""

import argparse

from halfsign.context import EvalContext
from halfsign.dirichlet import HorocycleSeries, contour_check
from halfsign.qspace import eigenbasis


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--order", type=int, default=100_000)
    p.add_argument("--r-max", type=int, default=40)
    p.add_argument("--xs", default="10,100")
    args = p.parse_args()
    form = eigenbasis(9, args.order)[0]
    ev = HorocycleSeries(form, args.r_max, digits=25)
    ctx = EvalContext(digits=25)
    for x in (float(v) for v in args.xs.split(",")):
        r = contour_check(form, x, ctx, r_max=args.r_max, evaluator=ev)
        print(f"x={x:g}  smoothed={r.smoothed:.12g}  contour={r.integral:.12g}  gap={r.gap:.2e}  quad_est={r.quad_error:.1e}")


if __name__ == "__main__":
    main()
