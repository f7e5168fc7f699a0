"""``wlab`` command line: characteristics, operator norms, decompositions, experiments."""
from __future__ import annotations

import argparse
import sys

from .dyadic import DyadicInterval, build_grid, read_function
from .lab import ExperimentConfig, get_operator, operator_norm_lower, run_experiment, build_family
from .oscillation import check_pointwise_bound, decompose, verify_family
from .weights import SCOPES, MixedExponents, make_weight, mixed_norm

EXIT_OK, EXIT_ARGS, EXIT_BOUND = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _grid(args):
    try:
        s, L = (int(x) for x in args.grid.split(","))
    except ValueError:
        raise ValueError("--grid expects 's,L'") from None
    origin = args.origin if args.origin is not None else -(2 ** (s - 1)) if s >= 1 else 0
    return build_grid(origin, s, L)


def _add_grid(p):
    p.add_argument("--grid", default="6,10", help="root length exponent s and level L, as 's,L'")
    p.add_argument("--origin", default=None, help="left end of the root (dyadic); default -2^(s-1)")


def cmd_char(args) -> int:
    grid = _grid(args)
    w = make_weight(args.weight, grid)
    if args.model == "cells":
        w = w.discrete()
    r = args.r if args.r is not None else args.p
    e = MixedExponents(args.p, r, args.alpha, args.beta, args.second)
    s = mixed_norm(w, e, args.scope)
    left, length = s.witness(grid)
    print(f"value {s.value!r}")
    print(f"argmax {left!r} {length!r}")
    print(f"scope {s.scope}")
    return EXIT_OK


def cmd_op_norm(args) -> int:
    grid = _grid(args)
    w = make_weight(args.weight, grid)
    if args.model == "cells":
        w = w.discrete()
    op = get_operator(args.op)
    fam = build_family(args.family, grid, w, args.p)
    nw = operator_norm_lower(op, w, args.p, fam)
    print(f"lower_bound {nw.value!r}")
    print(f"witness {nw.label}")
    print(f"norm_Tf {nw.norm_Tf!r}")
    print(f"norm_f {nw.norm_f!r}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    f = read_function(args.input)
    if args.q0 == "root":
        Q0 = f.grid.root
    else:
        d, j = (int(x) for x in args.q0.split(","))
        Q0 = DyadicInterval(f.grid, d, j)
    fam = decompose(f, Q0, verify=False)
    with open(args.out, "w") as fh:
        fh.write(fam.to_text())
    print(f"intervals {len(fam)}")
    print(f"levels {len(fam.levels)}")
    if args.verify:
        rep = verify_family(fam)
        pb = check_pointwise_bound(f, Q0, fam)
        print(f"family {'pass' if rep.ok else 'fail'} {rep.message}")
        print(f"pointwise {'pass' if pb.ok else 'fail'} max_excess {pb.max_excess!r} max_ratio {pb.max_ratio!r}")
        if not (rep.ok and pb.ok):
            return EXIT_BOUND
    return EXIT_OK


def cmd_exp(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    cfg.experiment = args.kind
    if args.workers is not None:
        cfg.workers = args.workers
    cfg.validate()
    rep, text = run_experiment(cfg)
    out = args.out or cfg.output
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for c in rep.checks:
        print(f"{'pass' if c.passed else 'FAIL'} {c.name} {c.detail}".rstrip(), file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_BOUND


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wlab", description="Weighted dyadic inequality laboratory.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("char", help="weight characteristic with its maximizing interval")
    p.add_argument("--weight", required=True, help="const:c | power:a | step:t | bump:delta,N,p")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--second", choices=("ar", "ainf", "fw"), default="ar")
    p.add_argument("--scope", choices=SCOPES, default="windowed")
    p.add_argument("--model", choices=("density", "cells"), default="density")
    _add_grid(p)
    p.set_defaults(func=cmd_char)

    p = sub.add_parser("op-norm", help="lower bound for an operator norm on L^p(w)")
    p.add_argument("--op", required=True, help="hilbert | sd | max | petermichl | mq")
    p.add_argument("--weight", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--family", default="random:0", help="buckley | haar | random:<seed>, joined with '+'")
    p.add_argument("--model", choices=("density", "cells"), default="cells")
    _add_grid(p)
    p.set_defaults(func=cmd_op_norm)

    p = sub.add_parser("decompose", help="sparse family of a function file")
    p.add_argument("--input", required=True)
    p.add_argument("--q0", default="root", help="'root' or 'depth,index'")
    p.add_argument("--out", required=True)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("exp", help="run an experiment from a JSON config")
    p.add_argument("kind", choices=("sharpness", "step", "bump", "keybound", "buckley", "oscillation"))
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_exp)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"wlab: error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
