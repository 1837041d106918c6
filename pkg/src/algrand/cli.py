"""Command-line front end.

Subcommands: generate, test, compare, table1, fetch. Exit codes are 0 on
success, 1 when some strings failed, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, Union

from . import __version__
from .bitstore import BitString, load_bits, load_concatenated, store_bits
from .csss import TEST_IDS, RunOptions, run_string
from .numtheory import DEFAULT_TEST_NUMBERS, TestNumberSet, carmichael_up_to, load_carmichael
from .records import ResultRecord, fmt_real, read_results, write_results
from .sources import PRNG_KINDS, FetchSession, QrngError, fetch_qrng
from .stats import P_NORMAL, P_SIGNIFICANT, ComparisonReport, Dataset, compare_all

log = logging.getLogger("algrand")

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2

DEFAULT_LENGTH = 1 << 20
DEFAULT_COUNT = 20
DEFAULT_CARMICHAEL_LIMIT = 10**6
KINDS = ("mt19937", "gfsr4", "file", "qrng-http")


class InputError(Exception):
    """Invalid manifest, arguments or input files."""


# -- manifest ---------------------------------------------------------------


@dataclass
class SampleSpec:
    label: str
    kind: str
    count: int = DEFAULT_COUNT
    length: int = DEFAULT_LENGTH
    seed: int = 1
    family: str = ""
    paths: list[str] = field(default_factory=list)
    concat: int = 1
    format: str = "raw"
    endpoint: Optional[str] = None
    cache_dir: Optional[str] = None
    block_size: int = 1024
    loop_to: Optional[int] = None
    complement: Optional[bool] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"sample {self.label!r}: unknown kind {self.kind!r}")
        if not self.family:
            self.family = "qrng" if self.kind == "qrng-http" else "prng"
        if self.kind == "file":
            if not self.paths:
                raise InputError(f"sample {self.label!r}: file samples need 'paths'")
            if self.concat < 1 or len(self.paths) % self.concat:
                raise InputError(f"sample {self.label!r}: {len(self.paths)} files do not split into groups of {self.concat}")
            self.count = len(self.paths) // self.concat
        if self.kind == "qrng-http" and not (self.endpoint or self.cache_dir):
            raise InputError(f"sample {self.label!r}: qrng-http samples need an endpoint or a cache_dir")
        if self.count < 1 or self.length < 1:
            raise InputError(f"sample {self.label!r}: count and length must be >= 1")

    def session(self, index: int) -> FetchSession:
        return FetchSession(
            endpoint=self.endpoint or "",
            block_size=self.block_size,
            cache_dir=Path(self.cache_dir) if self.cache_dir else None,
            name=f"{self.label}_{index:04d}",
            max_bits=max(self.length, 1 << 27),
        )

    def load(self, index: int) -> BitString:
        """The index-th string of this sample; PRNG strings use seed + index."""
        if self.kind in PRNG_KINDS:
            return PRNG_KINDS[self.kind](self.seed + index, self.length)
        if self.kind == "file":
            group = self.paths[index * self.concat : (index + 1) * self.concat]
            if self.format == "text":
                return load_bits(group[0], format="text")
            return load_concatenated(group)
        return fetch_qrng(self.session(index), self.length)


@dataclass
class RunManifest:
    samples: list[SampleSpec]
    tests: tuple[str, ...] = TEST_IDS
    carmichael: Union[int, str] = DEFAULT_CARMICHAEL_LIMIT
    test_numbers: Optional[list[int]] = None
    out: str = "results"
    jobs: int = 1
    loop_to: Optional[int] = None
    complement: bool = True

    @classmethod
    def from_dict(cls, data: dict, base_dir: Union[str, Path] = ".") -> "RunManifest":
        base = Path(base_dir)
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise InputError(f"unknown manifest keys: {sorted(extra)}")
        raw_samples = data.get("samples") or []
        if not raw_samples:
            raise InputError("manifest has no samples")
        sample_keys = {f.name for f in fields(SampleSpec)}
        samples = []
        for s in raw_samples:
            bad = set(s) - sample_keys
            if bad:
                raise InputError(f"unknown sample keys: {sorted(bad)}")
            s = dict(s)
            if "paths" in s:
                s["paths"] = [str(_resolve(base, p)) for p in s["paths"]]
            if s.get("cache_dir"):
                s["cache_dir"] = str(_resolve(base, s["cache_dir"]))
            try:
                samples.append(SampleSpec(**s))
            except TypeError as exc:
                raise InputError(f"bad sample definition: {exc}") from exc
        labels = [s.label for s in samples]
        if len(set(labels)) != len(labels):
            raise InputError("sample labels must be unique")
        kwargs = {k: v for k, v in data.items() if k != "samples"}
        if "tests" in kwargs:
            kwargs["tests"] = tuple(kwargs["tests"])
        carm = kwargs.get("carmichael")
        if isinstance(carm, str) and not carm.isdigit():
            kwargs["carmichael"] = str(_resolve(base, carm))
        elif carm is not None:
            kwargs["carmichael"] = int(carm)
        if "out" in kwargs:
            kwargs["out"] = str(_resolve(base, kwargs["out"]))
        manifest = cls(samples=samples, **kwargs)
        manifest.validate()
        return manifest

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunManifest":
        path = Path(path)
        if not path.is_file():
            raise InputError(f"manifest not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"manifest is not valid JSON: {exc}") from exc
        return cls.from_dict(data, path.parent)

    def validate(self) -> None:
        unknown = set(self.tests) - set(TEST_IDS)
        if unknown or not self.tests:
            raise InputError(f"unknown or empty test selection: {sorted(unknown)}")
        if self.jobs < 1:
            raise InputError("jobs must be >= 1")
        for s in self.samples:
            for p in s.paths:
                if not Path(p).is_file():
                    raise InputError(f"input file not found: {p}")
        if isinstance(self.carmichael, str) and not Path(self.carmichael).is_file():
            raise InputError(f"Carmichael file not found: {self.carmichael}")
        if isinstance(self.carmichael, int) and self.carmichael < 561:
            raise InputError("Carmichael limit must be >= 561")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tests"] = list(self.tests)
        return d

    def digest(self) -> str:
        """Content digest; output location and parallelism do not affect results."""
        d = self.to_dict()
        d.pop("out")
        d.pop("jobs")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def carmichael_list(self) -> list[int]:
        if isinstance(self.carmichael, str):
            return load_carmichael(self.carmichael)
        return carmichael_up_to(self.carmichael)

    def number_set(self) -> TestNumberSet:
        return TestNumberSet.from_ints(self.test_numbers or DEFAULT_TEST_NUMBERS)


def _resolve(base: Path, p: Union[str, Path]) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


# -- generate ---------------------------------------------------------------


def cmd_generate(spec: SampleSpec, count: int, length: int, outdir: Union[str, Path]) -> list[Path]:
    """Write ``count`` raw files of ceil(length/8) bytes each."""
    if spec.kind == "file":
        raise InputError("file samples are ingested, not generated")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    spec.count, spec.length = count, length
    written = []
    for i in range(count):
        path = outdir / f"{spec.label}_{i:04d}.bin"
        store_bits(spec.load(i), path)
        written.append(path)
    return written


# -- test ---------------------------------------------------------------------

_worker_state: dict = {}


def _init_worker(carmichael: list[int], numbers: TestNumberSet) -> None:
    _worker_state["carmichael"] = carmichael
    _worker_state["numbers"] = numbers


def _test_job(job: tuple) -> list[ResultRecord]:
    sample, index, tests, loop_to, complement, digest = job
    opts = RunOptions(
        tests=tests,
        complement=complement,
        loop_to=loop_to,
        carmichael=_worker_state["carmichael"],
        numbers=_worker_state["numbers"],
    )
    base = dict(generator=sample.label, family=sample.family, index=index, manifest_digest=digest)
    try:
        x = sample.load(index)
    except (OSError, ValueError, QrngError) as exc:
        err = f"{type(exc).__name__}: {exc}"
        orients = ("original", "complemented") if complement else ("original",)
        return [
            ResultRecord(orientation=o, test=t, value=None, error=err, **base)
            for o in orients
            for t in tests
        ]
    return [
        ResultRecord(orientation=o.orientation, test=o.test, value=o.value, detail=o.detail, error=o.error, **base)
        for o in run_string(x, index, opts)
    ]


def cmd_test(manifest: RunManifest, out: Union[str, Path, None] = None) -> tuple[Path, int]:
    """Run the manifest; returns (result file, number of failed records)."""
    outdir = Path(out or manifest.out)
    outdir.mkdir(parents=True, exist_ok=True)
    digest = manifest.digest()
    carmichael = manifest.carmichael_list() if any(t != "borel" for t in manifest.tests) else []
    numbers = manifest.number_set()
    jobs = []
    for s in manifest.samples:
        loop = s.loop_to if s.loop_to is not None else manifest.loop_to
        comp = s.complement if s.complement is not None else manifest.complement
        jobs.extend((s, i, manifest.tests, loop, comp, digest) for i in range(s.count))
    log.info("running %d strings with %d worker(s)", len(jobs), manifest.jobs)

    if manifest.jobs > 1:
        with ProcessPoolExecutor(manifest.jobs, initializer=_init_worker, initargs=(carmichael, numbers)) as pool:
            batches = list(pool.map(_test_job, jobs))
    else:
        _init_worker(carmichael, numbers)
        batches = [_test_job(j) for j in jobs]
    records = [r for batch in batches for r in batch]

    header = dict(
        suite_version=__version__,
        manifest_digest=digest,
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        tests=list(manifest.tests),
        samples=[s.label for s in manifest.samples],
        manifest=manifest.to_dict(),
    )
    result_path = outdir / "results.jsonl"
    write_results(result_path, header, records, csv_path=outdir / "results.csv")
    failures = sum(1 for r in records if r.error)
    return result_path, failures


# -- compare ------------------------------------------------------------------

COMPARE_FIELDS = (
    "test", "kind", "a", "b", "ks_statistic", "ks_p", "sw_p_a", "sw_p_b", "welch_applied",
    "welch_t", "welch_dof", "welch_p", "significant_ks", "significant_welch", "skipped",
)


def load_datasets(paths: Sequence[Union[str, Path]], tests: Optional[Sequence[str]] = None) -> dict[str, list[Dataset]]:
    """Group result values into datasets keyed by test id."""
    if not paths:
        raise InputError("no result files given")
    files = []
    for p in paths:
        if not Path(p).is_file():
            raise InputError(f"result file not found: {p}")
        files.append(read_results(p))
    test_sets = [f.tests for f in files]
    if tests:
        for p, ts in zip(paths, test_sets):
            missing = set(tests) - ts
            if missing:
                raise InputError(f"{p} has no results for test ids {sorted(missing)}")
        selected = list(tests)
    else:
        if any(ts != test_sets[0] for ts in test_sets):
            raise InputError("result files cover incompatible test ids: " + "; ".join(
                f"{p}: {sorted(ts)}" for p, ts in zip(paths, test_sets)))
        selected = sorted(test_sets[0])

    # a label present in several files is tagged with the file position so
    # that each file's sample stays a separate dataset
    owners: dict[str, set[int]] = {}
    for pos, f in enumerate(files, 1):
        for r in f.records:
            owners.setdefault(r.generator, set()).add(pos)
    groups: dict[tuple, list[tuple[int, float]]] = {}
    for pos, f in enumerate(files, 1):
        for r in f.records:
            if r.test not in selected or r.error or r.value is None:
                continue
            gen = r.generator if len(owners[r.generator]) == 1 else f"{r.generator}@{pos}"
            groups.setdefault((r.test, gen, r.family, r.orientation), []).append((r.index, float(r.value)))
    out: dict[str, list[Dataset]] = {t: [] for t in selected}
    for (test, gen, fam, orient), vals in sorted(groups.items()):
        vals.sort()
        out[test].append(Dataset([v for _, v in vals], generator=gen, test=test, orientation=orient, family=fam))
    return out


def cmd_compare(
    paths: Sequence[Union[str, Path]],
    outdir: Union[str, Path],
    tests: Optional[Sequence[str]] = None,
    sig_threshold: float = P_SIGNIFICANT,
    normal_threshold: float = P_NORMAL,
    cross: str = "family",
    include_self: bool = False,
) -> list[tuple[str, ComparisonReport]]:
    datasets = load_datasets(paths, tests)
    rows: list[tuple[str, ComparisonReport]] = []
    for test, ds in datasets.items():
        if len(ds) < 2 and not include_self:
            log.warning("test %s: fewer than two datasets, nothing to compare", test)
            continue
        for rep in compare_all(ds, cross=cross, include_self=include_self, sig_threshold=sig_threshold, normal_threshold=normal_threshold):
            rows.append((test, rep))
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COMPARE_FIELDS)
        for test, rep in rows:
            d = asdict(rep)
            w.writerow([test] + [fmt_real(d[k]) for k in COMPARE_FIELDS[1:]])
    with open(outdir / "compare.jsonl", "w") as fh:
        for test, rep in rows:
            fh.write(json.dumps({"test": test, **asdict(rep)}, sort_keys=True) + "\n")
    return rows


# -- table1 -------------------------------------------------------------------


def cmd_table1(
    numbers: Optional[Sequence[int]] = None,
    results: Sequence[Union[str, Path]] = (),
    exclude: Sequence[str] = (),
) -> list[dict]:
    """Rows of (n, m, k, p_SS[, p_obs]); p_obs averages N_viol/N over test-4 records."""
    tset = TestNumberSet.from_ints(numbers or DEFAULT_TEST_NUMBERS)
    pobs: dict[int, list[float]] = {t.n: [] for t in tset}
    for path in results:
        for r in read_results(path).records:
            if r.test != "csss4" or r.error or r.generator in exclude:
                continue
            viol = r.detail.get("per_n_violations", {})
            checked = r.detail.get("witnesses_checked", {})
            for n in pobs:
                c = checked.get(str(n))
                if c:
                    pobs[n].append(viol.get(str(n), 0) / c)
    rows = []
    for t in tset:
        row = {"n": t.n, "m": t.m_cs, "k": t.k_digits, "p_ss": t.p_ss}
        if results:
            vals = pobs[t.n]
            row["p_obs"] = sum(vals) / len(vals) if vals else None
        rows.append(row)
    return rows


def write_table1(rows: list[dict], out) -> None:
    cols = list(rows[0].keys()) if rows else ["n", "m", "k", "p_ss"]
    w = csv.writer(out)
    w.writerow(cols)
    for row in rows:
        w.writerow([fmt_real(row[c]) for c in cols])


# -- argument parsing ---------------------------------------------------------


def _carmichael_arg(value: str) -> Union[int, str]:
    return int(value) if value.isdigit() else value


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="algrand", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write PRNG or QRNG strings as raw binary files")
    g.add_argument("--manifest")
    g.add_argument("--kind", choices=[k for k in KINDS if k != "file"])
    g.add_argument("--label")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--count", type=int, default=DEFAULT_COUNT)
    g.add_argument("--length", type=int, default=DEFAULT_LENGTH)
    g.add_argument("--endpoint")
    g.add_argument("--cache-dir")
    g.add_argument("--block-size", type=int, default=1024)
    g.add_argument("--out", required=True)

    t = sub.add_parser("test", help="run randomness tests over the samples of a manifest")
    t.add_argument("--manifest", required=True)
    t.add_argument("--out")
    t.add_argument("--jobs", type=int)
    t.add_argument("--carmichael", type=_carmichael_arg, help="limit or path to a Carmichael list")
    t.add_argument("--loop-to", type=int)
    t.add_argument("--complement", action=argparse.BooleanOptionalAction, default=None)
    t.add_argument("--tests", help="comma-separated test ids")

    c = sub.add_parser("compare", help="pairwise statistics over result files")
    c.add_argument("results", nargs="+")
    c.add_argument("--out", required=True)
    c.add_argument("--test", action="append", dest="tests")
    c.add_argument("--sig-threshold", type=float, default=P_SIGNIFICANT)
    c.add_argument("--normal-threshold", type=float, default=P_NORMAL)
    c.add_argument("--cross", choices=("family", "all", "none"), default="family")
    c.add_argument("--include-self", action="store_true", help="also compare each dataset with itself")

    tb = sub.add_parser("table1", help="violation likelihood thresholds per test number")
    tb.add_argument("--numbers", help="comma-separated test numbers")
    tb.add_argument("--results", nargs="*", default=[])
    tb.add_argument("--exclude", action="append", default=[], help="generator label to leave out of p_obs")
    tb.add_argument("--out")

    f = sub.add_parser("fetch", help="download bits from a QRNG HTTP service into a cache")
    f.add_argument("--endpoint", required=True)
    f.add_argument("--count", type=int, required=True, help="bits")
    f.add_argument("--block-size", type=int, default=1024)
    f.add_argument("--cache-dir", required=True)
    f.add_argument("--name", default="qrng")
    f.add_argument("--max-attempts", type=int, default=5)
    f.add_argument("--backoff", type=float, default=1.0, help="first retry delay in seconds, doubled per retry")
    f.add_argument("--out", help="also write the raw bits here")
    return p


def _run(args: argparse.Namespace) -> int:
    if args.command == "generate":
        if args.manifest:
            manifest = RunManifest.load(args.manifest)
            for s in manifest.samples:
                if s.kind != "file":
                    cmd_generate(s, s.count, s.length, Path(args.out) / s.label)
            return EXIT_OK
        if not args.kind:
            raise InputError("either --manifest or --kind is required")
        spec = SampleSpec(
            label=args.label or args.kind, kind=args.kind, seed=args.seed, count=args.count,
            length=args.length, endpoint=args.endpoint, cache_dir=args.cache_dir,
            block_size=args.block_size,
        )
        for path in cmd_generate(spec, args.count, args.length, args.out):
            print(path)
        return EXIT_OK

    if args.command == "test":
        manifest = RunManifest.load(args.manifest)
        if args.jobs is not None:
            manifest.jobs = args.jobs
        if args.carmichael is not None:
            manifest.carmichael = args.carmichael
        if args.loop_to is not None:
            manifest.loop_to = args.loop_to
        if args.complement is not None:
            manifest.complement = args.complement
        if args.tests:
            manifest.tests = tuple(t.strip() for t in args.tests.split(","))
        manifest.validate()
        path, failures = cmd_test(manifest, args.out)
        print(path)
        if failures:
            log.error("%d result records failed", failures)
            return EXIT_PARTIAL
        return EXIT_OK

    if args.command == "compare":
        rows = cmd_compare(args.results, args.out, args.tests, args.sig_threshold,
                           args.normal_threshold, args.cross, args.include_self)
        flagged = [(t, r) for t, r in rows if r.significant_ks or r.significant_welch]
        print(f"{len(rows)} comparisons, {len(flagged)} significant")
        for t, r in flagged:
            print(f"  {t}: {r.a} vs {r.b} (ks_p={fmt_real(r.ks_p)}, welch_p={fmt_real(r.welch_p)})")
        skipped = sum(1 for _, r in rows if r.skipped and r.ks_p is None)
        return EXIT_PARTIAL if skipped else EXIT_OK

    if args.command == "table1":
        numbers = [int(v) for v in args.numbers.split(",")] if args.numbers else None
        for p in args.results:
            if not Path(p).is_file():
                raise InputError(f"result file not found: {p}")
        rows = cmd_table1(numbers, args.results, args.exclude)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                write_table1(rows, fh)
        else:
            write_table1(rows, sys.stdout)
        return EXIT_OK

    if args.command == "fetch":
        session = FetchSession(endpoint=args.endpoint, block_size=args.block_size,
                               cache_dir=Path(args.cache_dir), name=args.name,
                               max_attempts=args.max_attempts, backoff=args.backoff)
        x = fetch_qrng(session, args.count)
        if args.out:
            store_bits(x, args.out)
        print(session.cache_path)
        return EXIT_OK
    raise InputError(f"unknown command {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QrngError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
