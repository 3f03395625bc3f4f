"""Benchmark harness: datasets, query sets, timing, FPP and report output.

Timing protocol: a construction is repeated until at least ``MIN_DURATION``
seconds have elapsed and the per-construction average is kept; the median of
``repetitions`` such runs is reported per key.  Query timing uses the same
scheme over a shuffled query set, after one untimed warm-up pass.
Everything runs on the calling thread.
"""

from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import fuse
from .baselines import bloom_construct, xor_construct

FILTER_KINDS = ("fuse3", "fuse4", "xor", "bloom")
KEY_MODES = ("random", "sequential")
MIN_DURATION = 0.1

_STREAM_KEYS, _STREAM_QUERIES, _STREAM_FPP, _STREAM_FILTER = range(4)


def _stream(rng_seed: int, stream: int) -> np.random.Generator:
    """Independent generator for one purpose, split off ``rng_seed``."""
    return np.random.default_rng(np.random.SeedSequence(rng_seed, spawn_key=(stream,)))


@dataclass(frozen=True)
class BenchConfig:
    filter_kind: str
    n: int
    bits: float = 8  # fingerprint bits, or bits per key for bloom
    query_set_size: int = 10_000_000
    in_set_fraction: float = 0.25
    repetitions: int = 3
    key_mode: str = "random"
    rng_seed: int = 0

    def __post_init__(self):
        if self.filter_kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.filter_kind!r}")
        if self.key_mode not in KEY_MODES:
            raise ValueError(f"unknown key mode {self.key_mode!r}")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.query_set_size < 1:
            raise ValueError("query set size must be >= 1")
        if not 0.0 <= self.in_set_fraction <= 1.0:
            raise ValueError("in-set fraction must lie in [0, 1]")
        if self.repetitions < 1 or self.repetitions % 2 == 0:
            raise ValueError("repetitions must be a positive odd number")


@dataclass(frozen=True)
class BenchReport:
    filter_kind: str
    n: int
    bits: float
    construction_ns_per_key: float
    query_ns_per_key: float
    measured_fpp: float
    bits_per_key: float
    attempts: int


REPORT_COLUMNS = tuple(f.name for f in fields(BenchReport))


@dataclass(frozen=True)
class QuerySet:
    keys: np.ndarray
    is_member: np.ndarray

    @property
    def member_count(self) -> int:
        return int(self.is_member.sum())


# -- datasets -----------------------------------------------------------------


def _random_distinct(n: int, rng: np.random.Generator, exclude: np.ndarray | None = None) -> np.ndarray:
    """``n`` distinct uniform 64-bit keys in draw order, none in ``exclude``."""
    out = np.empty(0, dtype=np.uint64)
    while out.size < n:
        draw = rng.integers(0, 2**64, n - out.size, dtype=np.uint64, endpoint=False)
        merged = np.concatenate([out, draw])
        _, first = np.unique(merged, return_index=True)
        merged = merged[np.sort(first)]
        if exclude is not None and exclude.size:
            merged = merged[~np.isin(merged, exclude)]
        out = merged
    return out


def generate_keys(n: int, key_mode: str = "random", rng_seed: int = 0) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be >= 0")
    if key_mode == "sequential":
        return np.arange(1, n + 1, dtype=np.uint64)
    if key_mode != "random":
        raise ValueError(f"unknown key mode {key_mode!r}")
    return _random_distinct(n, _stream(rng_seed, _STREAM_KEYS))


def generate_query_set(keys: np.ndarray, query_set_size: int, in_set_fraction: float,
                       rng_seed: int = 0) -> QuerySet:
    """Shuffled mix of members (drawn with replacement) and fresh non-members."""
    members = math.floor(Fraction(str(in_set_fraction)) * query_set_size)
    if members and keys.size == 0:
        raise ValueError("cannot draw member queries from an empty key set")
    rng = _stream(rng_seed, _STREAM_QUERIES)
    picked = rng.choice(keys, size=members, replace=True) if members else np.empty(0, np.uint64)
    others = _random_distinct(query_set_size - members, rng, exclude=keys)
    order = rng.permutation(query_set_size)
    all_keys = np.concatenate([picked.astype(np.uint64), others])[order]
    truth = np.concatenate([np.ones(members, bool), np.zeros(others.size, bool)])[order]
    return QuerySet(keys=np.ascontiguousarray(all_keys), is_member=truth)


# -- filters ------------------------------------------------------------------


def build_filter(kind: str, keys: np.ndarray, bits: float, rng: np.random.Generator | None = None):
    """Construct a filter of ``kind``; returns ``(filter, attempts)``."""
    if kind in ("fuse3", "fuse4"):
        filt, report = fuse.construct(keys, arity=int(kind[-1]), k=int(bits), rng=rng)
        return filt, report.attempts
    if kind == "xor":
        return xor_construct(keys, k=int(bits), rng=rng)
    if kind == "bloom":
        return bloom_construct(keys, bits_per_key=bits, rng=rng), 1
    raise ValueError(f"unknown filter kind {kind!r}")


def _median_of_runs(action, repetitions: int, min_duration: float) -> float:
    """Median over runs of the average seconds per ``action()`` call."""
    runs = []
    for _ in range(repetitions):
        count = 0
        start = time.perf_counter()
        while True:
            action()
            count += 1
            elapsed = time.perf_counter() - start
            if elapsed >= min_duration:
                break
        runs.append(elapsed / count)
    return statistics.median(runs)


def time_construction(config: BenchConfig, keys: np.ndarray | None = None,
                      min_duration: float = MIN_DURATION) -> float:
    """Median construction time in ns per key."""
    if keys is None:
        keys = generate_keys(config.n, config.key_mode, config.rng_seed)
    rng = _stream(config.rng_seed, _STREAM_FILTER)
    build_filter(config.filter_kind, keys[: min(keys.size, 1000)], config.bits, rng)  # jit warm-up
    seconds = _median_of_runs(
        lambda: build_filter(config.filter_kind, keys, config.bits, rng),
        config.repetitions, min_duration,
    )
    return seconds * 1e9 / max(keys.size, 1)


def time_queries(filter, query_set: QuerySet, repetitions: int = 3,
                 min_duration: float = MIN_DURATION) -> tuple[float, int]:
    """Median query time in ns per key, and the number of positive answers.

    The match count is returned so that callers consume it.
    """
    keys = query_set.keys
    matches = filter.count_matches(keys)  # warm-up: page faults and jit
    seconds = _median_of_runs(lambda: filter.count_matches(keys), repetitions, min_duration)
    return seconds * 1e9 / keys.size, matches


def measure_fpp(filter, non_member_count: int, rng_seed: int = 0,
                keys: np.ndarray | None = None) -> float:
    """Positive rate over uniformly random keys; members of ``keys`` are excluded."""
    if non_member_count < 1:
        raise ValueError("need at least one non-member query")
    rng = _stream(rng_seed, _STREAM_FPP)
    probes = _random_distinct(non_member_count, rng, exclude=keys)
    return filter.count_matches(probes) / non_member_count


def run_bench(config: BenchConfig) -> BenchReport:
    keys = generate_keys(config.n, config.key_mode, config.rng_seed)
    construction = time_construction(config, keys)
    filt, attempts = build_filter(config.filter_kind, keys, config.bits,
                                  _stream(config.rng_seed, _STREAM_FILTER))
    queries = generate_query_set(keys, config.query_set_size, config.in_set_fraction, config.rng_seed)
    query_ns, _ = time_queries(filt, queries, config.repetitions)

    answers = filt.contains_many(queries.keys)
    if not answers[queries.is_member].all():
        raise AssertionError("filter returned a false negative")
    non_members = ~queries.is_member
    fpp = float(answers[non_members].mean()) if non_members.any() else float("nan")
    return BenchReport(
        filter_kind=config.filter_kind,
        n=config.n,
        bits=config.bits,
        construction_ns_per_key=construction,
        query_ns_per_key=query_ns,
        measured_fpp=fpp,
        bits_per_key=fuse.bits_per_key(filt, config.n) if config.n else float("nan"),
        attempts=attempts,
    )


# -- theory and reports -------------------------------------------------------

THEORY_KINDS = ("bloom", "xor", "xor+", "fuse3", "fuse4", "lower-bound")


def theoretical_space(filter_kind: str, epsilon: float) -> float:
    """Asymptotic bits per key needed for false-positive probability ``epsilon``."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    bits = math.log2(1.0 / epsilon)
    if filter_kind == "bloom":
        return 1.44 * bits
    if filter_kind == "xor":
        return 1.23 * bits
    if filter_kind == "xor+":
        return 1.0824 * bits + 0.5125
    if filter_kind == "fuse3":
        return 1.125 * bits
    if filter_kind == "fuse4":
        return 1.075 * bits
    if filter_kind == "lower-bound":
        return bits
    raise ValueError(f"unknown filter kind {filter_kind!r}")


def theory_table(epsilon: float) -> list[tuple[str, float]]:
    return [(kind, theoretical_space(kind, epsilon)) for kind in THEORY_KINDS]


def _sorted_reports(reports):
    return sorted(reports, key=lambda r: (r.filter_kind, r.n, r.bits))


def write_csv(reports, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_COLUMNS)
            for r in _sorted_reports(reports):
                writer.writerow(asdict(r)[c] for c in REPORT_COLUMNS)
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


# figure name -> (x column, y column) of BenchReport
FIGURES = {
    "construction_vs_n": ("n", "construction_ns_per_key"),
    "bits_vs_n": ("n", "bits_per_key"),
    "construction_vs_fpp": ("measured_fpp", "construction_ns_per_key"),
    "space_overhead_vs_fpp": ("measured_fpp", "relative_space"),
    "query_vs_fpp": ("measured_fpp", "query_ns_per_key"),
}


def _figure_value(report: BenchReport, column: str) -> float:
    if column == "relative_space":
        if not 0 < report.measured_fpp < 1:
            return float("nan")
        return report.bits_per_key / math.log2(1 / report.measured_fpp)
    return float(getattr(report, column))


def write_dat(path: Path, blocks: dict[str, list[tuple[float, float]]], columns: tuple[str, str]) -> None:
    """Gnuplot data file: one indexed block per series, separated by two blank lines."""
    try:
        with path.open("w") as fh:
            for i, (name, rows) in enumerate(blocks.items()):
                if i:
                    fh.write("\n\n")
                fh.write(f"# {name}\n# {columns[0]} {columns[1]}\n")
                for x, y in rows:
                    fh.write(f"{x:.6g} {y:.6g}\n")
    except OSError as exc:
        raise OSError(f"cannot write figure data {path}: {exc}") from exc


def emit_report(reports, csv_path, figure_dir=None) -> dict[str, Path]:
    """Write the CSV and, if ``figure_dir`` is given, one ``.dat`` file per figure."""
    if not reports:
        raise ValueError("need at least one report")
    written = {"csv": write_csv(reports, csv_path)}
    if figure_dir is None:
        return written
    figure_dir = Path(figure_dir)
    figure_dir.mkdir(parents=True, exist_ok=True)
    for name, (xcol, ycol) in FIGURES.items():
        blocks: dict[str, list] = {}
        for r in _sorted_reports(reports):
            series = f"{r.filter_kind}-{r.bits:g}"
            blocks.setdefault(series, []).append((_figure_value(r, xcol), _figure_value(r, ycol)))
        path = figure_dir / f"{name}.dat"
        write_dat(path, blocks, (xcol, ycol))
        written[name] = path
    return written


def write_theory_figures(figure_dir, ns=None) -> dict[str, Path]:
    """Theoretical space curves over 2^-16..2^-8 and segment ratios versus n."""
    figure_dir = Path(figure_dir)
    figure_dir.mkdir(parents=True, exist_ok=True)
    eps_values = [2.0**-b for b in range(8, 17)]
    space = {
        kind: [(eps, theoretical_space(kind, eps)) for eps in eps_values]
        for kind in THEORY_KINDS
    }
    space_path = figure_dir / "theory_space.dat"
    write_dat(space_path, space, ("epsilon", "bits_per_key"))

    if ns is None:
        ns = [int(10 ** (e / 4)) for e in range(12, 37)]
    ratios = {
        f"fuse{a}": [(n, fuse.segment_ratio(fuse.compute_layout(n, a))) for n in ns]
        for a in (3, 4)
    }
    ratio_path = figure_dir / "segment_ratio.dat"
    write_dat(ratio_path, ratios, ("n", "array_over_segment"))
    return {"theory_space": space_path, "segment_ratio": ratio_path}
