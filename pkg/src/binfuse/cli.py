"""Command-line entry point: ``binfuse {build,query,bench,fpp,report-theory}``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench, persistence
from .baselines import bloom_expected_fpp, bloom_optimal_hash_count
from .errors import ConfigurationError, ConstructionError, FormatError

EXIT_OK = 0
EXIT_CONSTRUCTION = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _parse_key(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise ValueError(f"key out of 64-bit range: {text}")
    return value


def _read_keys(stream) -> np.ndarray:
    return np.array([_parse_key(line.strip()) for line in stream if line.strip()], dtype=np.uint64)


def _bits_for(kind: str, args) -> float:
    return args.bits_per_key if kind == "bloom" else args.bits


def _add_filter_args(p, multiple=False):
    if multiple:
        p.add_argument("--filter", nargs="+", choices=bench.FILTER_KINDS,
                       default=list(bench.FILTER_KINDS), dest="filters")
        p.add_argument("--n", nargs="+", type=int, default=[1_000_000], dest="ns")
    else:
        p.add_argument("--filter", choices=bench.FILTER_KINDS, default="fuse3")
        p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--bits", type=int, choices=(8, 16), default=8,
                   help="fingerprint bits for fuse and xor filters")
    p.add_argument("--bits-per-key", type=float, default=12.0, help="Bloom filter bits per key")
    p.add_argument("--key-mode", choices=bench.KEY_MODES, default="random")
    p.add_argument("--seed", type=int, default=0, help="dataset RNG seed")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binfuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct a filter and write it to a file")
    _add_filter_args(p)
    p.add_argument("--keys", help="read keys (one per line) instead of generating --n keys; '-' for stdin")
    p.add_argument("--out", required=True)

    p = sub.add_parser("query", help="load a filter, answer one key per stdin line")
    p.add_argument("path")

    p = sub.add_parser("bench", help="run the benchmark sweep and write a CSV")
    _add_filter_args(p, multiple=True)
    p.add_argument("--queries", type=int, default=10_000_000)
    p.add_argument("--in-set-fraction", type=float, default=0.25)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--figures", help="directory for per-figure gnuplot data files")

    p = sub.add_parser("fpp", help="measure the false-positive probability only")
    _add_filter_args(p)
    p.add_argument("--queries", type=int, default=10_000_000, help="number of non-member probes")

    p = sub.add_parser("report-theory", help="theoretical bits per key for a target epsilon")
    p.add_argument("--epsilon", type=float, default=2.0**-8)
    p.add_argument("--out", help="directory for theory_space.dat and segment_ratio.dat")
    return parser


def cmd_build(args) -> int:
    if args.keys == "-":
        keys = _read_keys(sys.stdin)
    elif args.keys:
        with open(args.keys) as fh:
            keys = _read_keys(fh)
    else:
        keys = bench.generate_keys(args.n, args.key_mode, args.seed)
    filt, attempts = bench.build_filter(args.filter, keys, _bits_for(args.filter, args))
    persistence.save(filt, args.out)
    bpk = filt.storage_bits / keys.size if keys.size else float("nan")
    print(f"{args.filter}: n={keys.size} attempts={attempts} bits/key={bpk:.3f} -> {args.out}")
    return EXIT_OK


def cmd_query(args) -> int:
    filt = persistence.load(args.path)
    for line in sys.stdin:
        if line.strip():
            print("true" if filt.contains(_parse_key(line.strip())) else "false")
    return EXIT_OK


def cmd_bench(args) -> int:
    reports = []
    for kind in args.filters:
        for n in args.ns:
            config = bench.BenchConfig(
                filter_kind=kind, n=n, bits=_bits_for(kind, args),
                query_set_size=args.queries, in_set_fraction=args.in_set_fraction,
                repetitions=args.reps, key_mode=args.key_mode, rng_seed=args.seed,
            )
            r = bench.run_bench(config)
            print(f"{kind:6s} n={n:<10d} build {r.construction_ns_per_key:8.1f} ns/key  "
                  f"query {r.query_ns_per_key:7.1f} ns/key  fpp {r.measured_fpp:.5%}  "
                  f"bits/key {r.bits_per_key:.3f}  attempts {r.attempts}")
            reports.append(r)
    written = bench.emit_report(reports, args.out, args.figures)
    for name, path in written.items():
        print(f"wrote {name}: {path}")
    return EXIT_OK


def cmd_fpp(args) -> int:
    keys = bench.generate_keys(args.n, args.key_mode, args.seed)
    bits = _bits_for(args.filter, args)
    filt, _ = bench.build_filter(args.filter, keys, bits)
    fpp = bench.measure_fpp(filt, args.queries, args.seed, keys=keys)
    if args.filter == "bloom":
        expected = bloom_expected_fpp(bits, bloom_optimal_hash_count(bits))
    else:
        expected = 2.0 ** -args.bits
    print(f"{args.filter}: measured fpp {fpp:.6%} (expected {expected:.6%}) over {args.queries} probes")
    return EXIT_OK


def cmd_report_theory(args) -> int:
    print(f"# bits per key at epsilon = {args.epsilon:.6g}")
    for kind, bits in bench.theory_table(args.epsilon):
        print(f"{kind:12s} {bits:.2f}")
    if args.out:
        for name, path in bench.write_theory_figures(args.out).items():
            print(f"wrote {name}: {path}")
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "query": cmd_query,
    "bench": cmd_bench,
    "fpp": cmd_fpp,
    "report-theory": cmd_report_theory,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
