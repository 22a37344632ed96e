"""Command-line front-end: dataset generation, demos, training, benchmarks.

Subcommands: ``gen-toy``, ``bayes-demo``, ``train``, ``detect``, ``bench``.
Every subcommand also accepts ``--config FILE`` pointing at a flat
``key=value`` file whose keys mirror the long flag names (one ``test=...``
line per benchmark case; boolean flags take true/false).  Explicit flags
override config values.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, persistence, sca
from .data import DataMatrix, load_csv
from .optimizer import CgConfig, trace_rows

METHODS = ("pca", "kpca", "ae", "sae", "sca")
_BOOL_KEYS = {"noise-as-sd", "svg", "header", "lower-tail"}


# ---------------------------------------------------------------------------
# Toy heteroscedastic process


def toy_response(t1, t2) -> np.ndarray:
    """Noise-free response of the two-factor toy process.

    Three measured variables driven by two latent factors through polynomial
    maps of different degrees, so the variables react to factor shifts with
    very different variances.
    """
    x1 = t1 + np.zeros_like(np.asarray(t1, dtype=float))
    x2 = t1**3 - 4.5 * t2**2 + 6.0 * t1 + t2
    x3 = 3.0 * t1**4 - t2**3 + 3.0 * t2**2
    return np.array([x1, x2, x3])


def toy_samples(rng: np.random.Generator, m: int, noise_scale: float) -> np.ndarray:
    """Draw m samples (3 x m) of the toy process with standard-normal factors.

    ``noise_scale`` is the additive-noise std per variable.
    """
    t1 = rng.standard_normal(m)
    t2 = rng.standard_normal(m)
    e = rng.normal(0.0, noise_scale, size=(3, m))
    return toy_response(t1, t2) + e


def gen_toy(
    out_dir: str | Path,
    seed: int = 0,
    train_m: int = 500,
    normal_m: int = 100,
    fault_m: int = 400,
    train_noise: float = 0.1,
    test_noise: float = 0.5,
    noise_as_sd: bool = False,
) -> tuple[Path, Path]:
    """Write toy train/test CSVs (samples as rows, header x1,x2,x3).

    The test file holds ``normal_m`` normal samples followed by ``fault_m``
    faulty ones (every variable shifted by +1).  Noise parameters are read
    as variances unless ``noise_as_sd`` is set.
    """
    if min(train_m, normal_m, fault_m) < 1:
        raise ValueError("sample counts must be positive")
    scale = (lambda v: v) if noise_as_sd else (lambda v: float(np.sqrt(v)))
    rng = np.random.default_rng(seed)
    train = toy_samples(rng, train_m, scale(train_noise))
    normal = toy_samples(rng, normal_m, scale(test_noise))
    fault = toy_samples(rng, fault_m, scale(test_noise)) + 1.0

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train.csv"
    test_path = out_dir / "test.csv"
    _write_samples_csv(train_path, train)
    _write_samples_csv(test_path, np.concatenate([normal, fault], axis=1))
    return train_path, test_path


def _write_samples_csv(path: Path, values: np.ndarray) -> None:
    with path.open("w") as fh:
        fh.write(",".join(f"x{i + 1}" for i in range(values.shape[0])) + "\n")
        for col in values.T:
            fh.write(",".join(repr(float(v)) for v in col) + "\n")


# ---------------------------------------------------------------------------
# Bayes posterior demo (why squared terms matter for unequal variances)


def bayes_posterior(
    mu0: float, mu1: float, sd0: float, sd1: float, grid: np.ndarray
) -> np.ndarray:
    """P(normal | x) for two equal-prior Gaussian classes on a 1-D grid.

    With unequal class sds the log-odds is quadratic in x, so a purely
    linear score cannot represent the posterior boundary.
    """
    if sd0 <= 0 or sd1 <= 0:
        raise ValueError("class standard deviations must be positive")
    x = np.asarray(grid, dtype=float)
    log_p0 = -0.5 * ((x - mu0) / sd0) ** 2 - np.log(sd0)
    log_p1 = -0.5 * ((x - mu1) / sd1) ** 2 - np.log(sd1)
    # sigmoid of the log-likelihood gap, computed stably on both sides
    gap = log_p0 - log_p1
    out = np.empty_like(gap)
    pos = gap >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-gap[pos]))
    eg = np.exp(gap[~pos])
    out[~pos] = eg / (1.0 + eg)
    return out


# ---------------------------------------------------------------------------
# Benchmark orchestration


@dataclass
class BenchCase:
    test_path: Path
    normal_count: int
    fault_id: str

    def __post_init__(self) -> None:
        self.test_path = Path(self.test_path)
        if self.normal_count < 1:
            raise ValueError("normal_count must be at least 1")


@dataclass
class BenchSpec:
    train_path: Path
    cases: list[BenchCase]
    methods: list[str]
    p: int | None = None
    energy: float | None = None
    zeta: float = sca.DEFAULT_ZETA
    seed: int = 0
    out_dir: Path = Path("bench_out")
    svg: bool = False
    samples: str = "rows"
    header: bool = True
    max_iters: int = 500

    def __post_init__(self) -> None:
        self.train_path = Path(self.train_path)
        self.out_dir = Path(self.out_dir)
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if (self.p is None) == (self.energy is None):
            raise ValueError("specify exactly one of p or energy")


@dataclass
class BenchResult:
    rows: list[dict] = field(default_factory=list)
    resolved_p: int | None = None
    metrics_path: Path | None = None

    def rates(self, fault_id: str, method: str) -> tuple[float, float] | None:
        for row in self.rows:
            if row["fault_id"] == fault_id and row["method"] == method:
                if row["mdr"] is None:
                    return None
                return row["mdr"], row["far"]
        return None


def derive_seed(seed: int, *labels: str) -> int:
    """Stable per-cell seed from the run seed and string labels."""
    digest = hashlib.sha256(
        ("|".join([str(seed), *labels])).encode()
    ).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def resolve_p(train: DataMatrix, p: int | None, energy: float | None) -> int:
    """Explicit p, or the smallest rank reaching the eigenvalue-energy target."""
    if p is not None:
        return p
    model = baselines.pca_fit(train, energy=energy)
    return model.n_components


def train_method(
    method: str,
    train_dm: DataMatrix,
    p: int,
    zeta: float,
    seed: int,
    energy: float | None = None,
    max_iters: int = 500,
):
    """Fit one monitoring method; returns (model, trace-or-None)."""
    if method == "pca":
        if energy is not None:
            return baselines.pca_fit(train_dm, energy=energy, zeta=zeta), None
        return baselines.pca_fit(train_dm, n_components=p, zeta=zeta), None
    if method == "kpca":
        return baselines.kpca_fit(train_dm, p, zeta=zeta), None
    if method == "ae":
        return baselines.ae_train(train_dm, p, seed=seed, zeta=zeta)
    if method == "sae":
        return baselines.sae_train(train_dm, p, seed=seed, zeta=zeta)
    if method == "sca":
        cfg = CgConfig(seed=seed, max_iters=max_iters)
        return sca.train(train_dm, p, cfg=cfg, zeta=zeta)
    raise ValueError(f"unknown method {method!r}")


def run_bench(spec: BenchSpec) -> BenchResult:
    """Train every requested method once and score every fault case.

    Writes metrics.csv (fault_id, method, mdr, far), one chart CSV per cell,
    convergence traces for the iterative methods, run metadata, and optional
    SVG charts.  A failing method or case is recorded as NA and skipped, not
    fatal.
    """
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    train_dm = load_csv(spec.train_path, samples=spec.samples, header=spec.header)
    result = BenchResult()
    metadata: dict = {
        "seed": spec.seed,
        "zeta": spec.zeta,
        "methods": spec.methods,
        "train_path": str(spec.train_path),
        "cases": [
            {"test_path": str(c.test_path), "normal_count": c.normal_count,
             "fault_id": c.fault_id}
            for c in spec.cases
        ],
        "wall_times": {},
        "method_seeds": {},
        "failures": [],
    }

    p = resolve_p(train_dm, spec.p, spec.energy)
    result.resolved_p = p
    metadata["p"] = p
    metadata["energy"] = spec.energy

    models: dict[str, object] = {}
    for method in spec.methods:
        m_seed = derive_seed(spec.seed, method)
        metadata["method_seeds"][method] = m_seed
        t0 = time.perf_counter()
        try:
            model, trace = train_method(
                method, train_dm, p, spec.zeta, m_seed,
                energy=spec.energy, max_iters=spec.max_iters,
            )
        except Exception as exc:  # record and move on
            metadata["failures"].append({"method": method, "stage": "train",
                                         "error": str(exc)})
            continue
        metadata["wall_times"][method] = time.perf_counter() - t0
        models[method] = model
        if trace is not None:
            _write_trace_csv(spec.out_dir / f"trace_{method}.csv", trace)

    for case in spec.cases:
        test_dm = load_csv(case.test_path, samples=spec.samples, header=spec.header)
        for method in spec.methods:
            row = {"fault_id": case.fault_id, "method": method,
                   "mdr": None, "far": None}
            model = models.get(method)
            if model is not None:
                try:
                    report = sca.monitor(model, test_dm)
                    mdr, far = sca.score(report.flags, case.normal_count)
                    row["mdr"], row["far"] = mdr, far
                    _write_chart_csv(
                        spec.out_dir / f"chart_fault{case.fault_id}_{method}.csv",
                        report, model.control_limit, case.normal_count,
                    )
                    if spec.svg:
                        _write_svg_chart(
                            spec.out_dir / f"chart_fault{case.fault_id}_{method}.svg",
                            report.t2, model.control_limit, case.normal_count,
                            f"fault {case.fault_id} / {method}",
                        )
                except Exception as exc:
                    metadata["failures"].append(
                        {"method": method, "stage": f"fault {case.fault_id}",
                         "error": str(exc)}
                    )
            result.rows.append(row)

    metrics_path = spec.out_dir / "metrics.csv"
    with metrics_path.open("w") as fh:
        fh.write("fault_id,method,mdr,far\n")
        for row in result.rows:
            mdr = "NA" if row["mdr"] is None else f"{row['mdr']:.2f}"
            far = "NA" if row["far"] is None else f"{row['far']:.2f}"
            fh.write(f"{row['fault_id']},{row['method']},{mdr},{far}\n")
    result.metrics_path = metrics_path
    (spec.out_dir / "run_metadata.json").write_text(json.dumps(metadata, indent=2))
    return result


def _write_trace_csv(path: Path, trace) -> None:
    with path.open("w") as fh:
        fh.write("iter,cost,grad_norm\n")
        for k, c, g in trace_rows(trace):
            fh.write(f"{k},{c!r},{g!r}\n")


def _write_chart_csv(
    path: Path, report: sca.DetectionReport, tau: float,
    normal_count: int | None,
) -> None:
    with path.open("w") as fh:
        fh.write("index,t2,tau,label,flag\n")
        for i, (value, flag) in enumerate(zip(report.t2, report.flags)):
            label = "" if normal_count is None else int(i >= normal_count)
            fh.write(f"{i},{float(value)!r},{float(tau)!r},{label},{int(flag)}\n")


def _write_svg_chart(
    path: Path, t2: np.ndarray, tau: float, normal_count: int, title: str
) -> None:
    """Minimal line chart: T2 dots (normal blue, fault red) and the limit."""
    width, height, pad = 900, 320, 45
    m = len(t2)
    y_max = max(float(np.quantile(t2, 0.98)), 3.0 * tau, 1e-12)
    xs = pad + (width - 2 * pad) * np.arange(m) / max(m - 1, 1)
    ys = height - pad - (height - 2 * pad) * np.minimum(t2, y_max) / y_max
    tau_y = height - pad - (height - 2 * pad) * min(tau, y_max) / y_max
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{pad}" y="20" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" '
        f'y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" '
        f'stroke="black"/>',
        f'<line x1="{pad}" y1="{tau_y:.2f}" x2="{width - pad}" y2="{tau_y:.2f}" '
        f'stroke="black" stroke-dasharray="6,4"/>',
        f'<text x="{width - pad + 4}" y="{tau_y:.2f}" font-size="11">limit</text>',
        f'<text x="2" y="{pad}" font-size="11">{y_max:.3g}</text>',
        f'<text x="2" y="{height - pad}" font-size="11">0</text>',
    ]
    for i, (x, y) in enumerate(zip(xs, ys)):
        color = "#1f77b4" if i < normal_count else "#d62728"
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.8" fill="{color}"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts))


# ---------------------------------------------------------------------------
# Argument parsing


def _expand_config(argv: list[str]) -> list[str]:
    """Replace --config FILE with the flag tokens it encodes."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ValueError("--config requires a file path")
    tokens: list[str] = []
    for line_no, line in enumerate(Path(argv[i + 1]).read_text().splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _BOOL_KEYS:
            if value.lower() in ("true", "1", "yes"):
                tokens.append(f"--{key}")
            elif value.lower() not in ("false", "0", "no"):
                raise ValueError(f"config key {key}: boolean value expected")
        else:
            tokens.extend([f"--{key}", value])
    # insert after the subcommand so explicit flags (later tokens) win
    rest = argv[:i] + argv[i + 2 :]
    return rest[:1] + tokens + rest[1:]


def _add_layout_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", choices=("rows", "cols"), default="rows",
                   help="CSV layout: samples as rows or columns")
    p.add_argument("--header", action="store_true",
                   help="skip one header line in input CSVs")
    p.add_argument("--config", help="key=value file mirroring the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scafd",
        description="Second-order component analysis fault detection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-toy", help="generate the toy heteroscedastic dataset")
    p_gen.add_argument("--out-dir", required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--train-m", type=int, default=500)
    p_gen.add_argument("--normal-m", type=int, default=100)
    p_gen.add_argument("--fault-m", type=int, default=400)
    p_gen.add_argument("--train-noise", type=float, default=0.1)
    p_gen.add_argument("--test-noise", type=float, default=0.5)
    p_gen.add_argument("--noise-as-sd", action="store_true",
                       help="read the noise parameters as std, not variance")
    p_gen.add_argument("--config", help="key=value file mirroring the flags")
    p_gen.set_defaults(func=_cmd_gen_toy)

    p_bayes = sub.add_parser("bayes-demo",
                             help="posterior of two Gaussian classes on a grid")
    p_bayes.add_argument("--mu0", type=float, default=0.0)
    p_bayes.add_argument("--mu1", type=float, default=1.0)
    p_bayes.add_argument("--sd0", type=float, default=1.0)
    p_bayes.add_argument("--sd1", type=float, default=2.0)
    p_bayes.add_argument("--grid-min", type=float, default=-6.0)
    p_bayes.add_argument("--grid-max", type=float, default=6.0)
    p_bayes.add_argument("--grid-points", type=int, default=241)
    p_bayes.add_argument("--out", required=True)
    p_bayes.add_argument("--config", help="key=value file mirroring the flags")
    p_bayes.set_defaults(func=_cmd_bayes_demo)

    p_train = sub.add_parser("train", help="fit a monitor and save the model file")
    p_train.add_argument("--train", required=True, help="training CSV (normal data)")
    p_train.add_argument("--method", choices=METHODS, default="sca")
    p_train.add_argument("--p", type=int, default=None)
    p_train.add_argument("--energy", type=float, default=None,
                         help="eigenvalue-energy fraction for choosing p")
    p_train.add_argument("--zeta", type=float, default=sca.DEFAULT_ZETA)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--max-iters", type=int, default=500)
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.add_argument("--trace", default=None, help="optional trace CSV path")
    _add_layout_flags(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_detect = sub.add_parser("detect", help="score a data file with a saved model")
    p_detect.add_argument("--model", required=True)
    p_detect.add_argument("--data", required=True)
    p_detect.add_argument("--normal-count", type=int, default=None)
    p_detect.add_argument("--out", default=None, help="optional chart CSV path")
    _add_layout_flags(p_detect)
    p_detect.set_defaults(func=_cmd_detect)

    p_bench = sub.add_parser("bench", help="train methods and score fault cases")
    p_bench.add_argument("--train", required=True)
    p_bench.add_argument("--test", action="append", default=[],
                         help="case as path:normal_count:fault_id (repeatable)")
    p_bench.add_argument("--methods", default="pca,sca",
                         help="comma-separated subset of " + ",".join(METHODS))
    p_bench.add_argument("--p", type=int, default=None)
    p_bench.add_argument("--energy", type=float, default=None)
    p_bench.add_argument("--zeta", type=float, default=sca.DEFAULT_ZETA)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--max-iters", type=int, default=500)
    p_bench.add_argument("--out-dir", required=True)
    p_bench.add_argument("--svg", action="store_true",
                         help="also write an SVG chart per cell")
    _add_layout_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def _cmd_gen_toy(args) -> int:
    train_path, test_path = gen_toy(
        args.out_dir, seed=args.seed, train_m=args.train_m,
        normal_m=args.normal_m, fault_m=args.fault_m,
        train_noise=args.train_noise, test_noise=args.test_noise,
        noise_as_sd=args.noise_as_sd,
    )
    print(f"wrote {train_path}")
    print(f"wrote {test_path} (first {args.normal_m} samples normal)")
    return 0


def _cmd_bayes_demo(args) -> int:
    grid = np.linspace(args.grid_min, args.grid_max, args.grid_points)
    posterior = bayes_posterior(args.mu0, args.mu1, args.sd0, args.sd1, grid)
    with Path(args.out).open("w") as fh:
        fh.write("x,p_normal\n")
        for x, p_val in zip(grid, posterior):
            fh.write(f"{float(x)!r},{float(p_val)!r}\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_train(args) -> int:
    train_dm = load_csv(args.train, samples=args.samples, header=args.header)
    p = resolve_p(train_dm, args.p, args.energy) if (args.p or args.energy) else None
    if p is None:
        raise ValueError("specify --p or --energy")
    seed = derive_seed(args.seed, args.method)
    model, trace = train_method(
        args.method, train_dm, p, args.zeta, seed,
        energy=args.energy if args.method == "pca" else None,
        max_iters=args.max_iters,
    )
    persistence.save_model(model, args.out)
    if args.trace and trace is not None:
        _write_trace_csv(Path(args.trace), trace)
    print(f"trained {args.method} (p={model.n_components}, "
          f"limit={model.control_limit:.4g}); wrote {args.out}")
    return 0


def _cmd_detect(args) -> int:
    model = persistence.load_model(args.model)
    data = load_csv(args.data, samples=args.samples, header=args.header)
    report = sca.monitor(model, data)
    for i, (value, flag) in enumerate(zip(report.t2, report.flags)):
        print(f"{i},{float(value):.6g},{int(flag)}")
    alarms = int(report.flags.sum())
    print(f"# alarms: {alarms}/{len(report.flags)} "
          f"(limit {model.control_limit:.6g})")
    if args.normal_count is not None:
        mdr, far = sca.score(report.flags, args.normal_count)
        print(f"# MDR: {mdr:.2f}%  FAR: {far:.2f}%")
    if args.out:
        _write_chart_csv(Path(args.out), report, model.control_limit,
                         args.normal_count)
        print(f"# wrote {args.out}")
    return 0


def _parse_case(text: str) -> BenchCase:
    parts = text.rsplit(":", 2)
    if len(parts) != 3:
        raise ValueError(
            f"bad --test value {text!r}: expected path:normal_count:fault_id"
        )
    return BenchCase(Path(parts[0]), int(parts[1]), parts[2])


def _cmd_bench(args) -> int:
    if not args.test:
        raise ValueError("at least one --test case is required")
    spec = BenchSpec(
        train_path=Path(args.train),
        cases=[_parse_case(t) for t in args.test],
        methods=[m.strip() for m in args.methods.split(",") if m.strip()],
        p=args.p,
        energy=args.energy,
        zeta=args.zeta,
        seed=args.seed,
        out_dir=Path(args.out_dir),
        svg=args.svg,
        samples=args.samples,
        header=args.header,
        max_iters=args.max_iters,
    )
    result = run_bench(spec)
    print(f"p = {result.resolved_p}")
    for row in result.rows:
        mdr = "NA" if row["mdr"] is None else f"{row['mdr']:6.2f}"
        far = "NA" if row["far"] is None else f"{row['far']:6.2f}"
        print(f"fault {row['fault_id']:>4}  {row['method']:>5}  "
              f"MDR {mdr}  FAR {far}")
    print(f"wrote {result.metrics_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError, FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
