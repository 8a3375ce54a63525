"""Tabulate |M(sigma + i tau)| on a vertical line using the horocycle evaluator."""

import argparse

import mpmath

from halfsign.context import EvalContext
from halfsign.dirichlet import HorocycleSeries, m_eval
from halfsign.qspace import eigenbasis


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--order", type=int, default=100_000)
    p.add_argument("--sigma", type=float, default=0.8)
    p.add_argument("--tau-max", type=float, default=50.0)
    p.add_argument("--step", type=float, default=2.5)
    p.add_argument("--r-max", type=int, default=20)
    args = p.parse_args()
    form = eigenbasis(9, args.order)[0]
    ev = HorocycleSeries(form, args.r_max, digits=40, panel=0.1, nodes=32)
    ctx = EvalContext(digits=40)
    print("tau,abs_M,error")
    tau = 0.0
    while tau <= args.tau_max + 1e-9:
        m = m_eval(form, mpmath.mpc(args.sigma, tau), ctx, args.r_max, "horocycle", ev)
        print(f"{tau:g},{abs(complex(m.value)):.10g},{m.certified_error:.2e}")
        tau += args.step


if __name__ == "__main__":
    main()
