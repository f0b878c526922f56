"""Command-line interface.

Every command writes a table (CSV or JSON) preceded by a reproducibility
header: tool version, the full run manifest and any seeds. Identical
manifests give byte-identical output.

Exit codes: 0 ok, 1 bound violated, 2 usage, 3 invalid kernel or kernel file,
4 contraction hypotheses not certified, 5 non-convergence, 6 I/O error.
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .catalog import EXAMPLES, builtin, check_gamma
from .contraction import SearchConfig, classify, coefficients_k_step, one_step_report
from .dynamics import audit_convergence, certified_rates, default_starts, invariant, iterate
from .errors import InvalidKernelError, NLMarkovError, UsageError
from .kernelfile import dump_spec, load_spec
from .measures import as_distribution
from .particles import law_error_curve

COMMANDS = ("validate", "analyze", "iterate", "invariant", "audit", "simulate", "examples")
DEFAULT_STEPS = {"analyze": 2, "iterate": 20, "audit": 40, "simulate": 30}
EXIT_IO = 6


@dataclass(frozen=True)
class RunManifest:
    command: str
    builtin: str | None = None
    gamma: float | None = None
    spec: str | None = None
    steps: int | None = None
    grid: int = 20
    min_step: float = 1e-6
    pair_floor: float = 1e-9
    eval_cap: int = 10**7
    tolerance: float = 2.5e-4
    starts: str | None = None
    starts_file: str | None = None
    tol: float = 1e-13
    max_iters: int = 100_000
    particles: tuple = (100, 1000, 10000)
    replicas: int = 20
    seed: int = 0
    mu0: tuple | None = None
    nu0: tuple | None = None
    format: str = "csv"
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.builtin is not None and self.spec is not None:
            raise UsageError("give either --builtin or --spec, not both")
        if self.gamma is not None and self.builtin is None and self.command != "examples":
            raise UsageError("--gamma only applies to --builtin kernels")
        if self.builtin is not None:
            if self.builtin not in EXAMPLES:
                raise UsageError(f"unknown builtin {self.builtin!r}")
            if self.gamma is None:
                # echo the value actually used
                object.__setattr__(self, "gamma", EXAMPLES[self.builtin][2])
            check_gamma(self.builtin, self.gamma)
        if self.steps is not None and self.steps < 0:
            raise UsageError("--steps must be >= 0")
        if self.seed < 0 or self.seed >= 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if self.replicas < 1 or any(n < 1 for n in self.particles):
            raise UsageError("--replicas and --particles must be positive")
        if self.starts == "file" and not self.starts_file:
            raise UsageError("--starts file needs --starts-file")

    @property
    def n_steps(self):
        return DEFAULT_STEPS.get(self.command, 0) if self.steps is None else self.steps

    def search(self):
        return SearchConfig(denominator=self.grid, min_step=self.min_step,
                            pair_floor=self.pair_floor, eval_cap=self.eval_cap,
                            tolerance=self.tolerance)

    def echo(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass
class Artifact:
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    status: int = 0


# -- formatting ------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_cell(x) for x in v)
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, np.generic):
        return v.item()
    return v


def header(manifest, art):
    return {"tool": "nlmarkov", "version": __version__, "manifest": manifest.echo(),
            "seeds": art.seeds}


def render(manifest, art):
    head = header(manifest, art)
    if manifest.format == "json":
        doc = dict(head)
        doc["summary"] = art.summary
        doc["notes"] = art.notes
        doc["columns"] = art.columns
        doc["rows"] = [dict(zip(art.columns, r)) for r in art.rows]
        return json.dumps(_jsonable(doc), indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# tool: nlmarkov {__version__}\n")
    buf.write(f"# manifest: {json.dumps(head['manifest'], sort_keys=True)}\n")
    buf.write(f"# seeds: {json.dumps(_jsonable(art.seeds), sort_keys=True)}\n")
    for k, v in art.summary.items():
        buf.write(f"# {k}: {_cell(v)}\n")
    for note in art.notes:
        buf.write(f"# note: {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(art.columns)
    for r in art.rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


# -- commands --------------------------------------------------------------


def load_kernel(manifest):
    """Return ``(kernel, published_claims)`` for the manifest's kernel source."""
    if manifest.builtin is not None:
        return builtin(manifest.builtin, manifest.gamma)
    if manifest.spec is not None:
        return load_spec(manifest.spec), []
    raise UsageError("a kernel is required: --builtin NAME or --spec PATH")


def _law(values, size, default_vertex=0):
    if values is None:
        mu = np.zeros(size)
        mu[default_vertex] = 1.0
        return mu
    try:
        return as_distribution(values, size)
    except ValueError as exc:
        raise UsageError(f"bad initial law: {exc}") from None


def cmd_validate(manifest):
    cols = ["kind", "x", "j", "k", "magnitude"]
    try:
        kernel, _ = load_kernel(manifest)
        violations, name = kernel.report.violations, kernel.name
    except InvalidKernelError as exc:
        violations, name = exc.violations, None
    rows = [[v.kind, *_labelled(v), v.magnitude] for v in violations]
    art = Artifact(cols, rows, {"kernel": name, "valid": not violations})
    art.notes = [v.describe() for v in violations]
    art.status = 3 if violations else 0
    return art


def _labelled(v):
    # 1-based (x, j, k), blank where the violation kind has no such index
    names = {"base-row-sum": "x", "row-sum dependence": "xk", "negative entry": "xjk"}[v.kind]
    where = dict(zip(names, v.index))
    return [None if n not in where else where[n] + 1 for n in "xjk"]


def _witness_row(report, coefficient):
    if coefficient == "alpha":
        w, br = report.alpha_witness, report.alpha
        x, y, val = w.x + 1, w.y + 1, w.tv
    else:
        w, br = report.lambda_witness, report.lam
        x, y, val = w.x + 1, None, w.ratio
    return [report.steps, coefficient, br.lower, br.upper, br.width,
            "exact" if br.is_exact else "bracketed", x, y, val, w.mu, w.nu]


def _claim_notes(claims, reports):
    notes = []
    for c in claims:
        rep = reports.get(c.steps)
        if rep is None:
            continue
        br = rep.alpha if c.quantity == "alpha" else rep.lam
        where = f"{c.steps}-step {c.quantity}"
        computed = f"[{br.lower:.6g}, {br.upper:.6g}]"
        if c.holds(br.lower, br.upper):
            notes.append(f"{where}: consistent with published value {c.text} (computed {computed})")
        else:
            notes.append(f"{where}: DISCREPANCY with published value {c.text}; computed {computed}")
    return notes


def cmd_analyze(manifest):
    kernel, claims = load_kernel(manifest)
    k = manifest.n_steps
    if k < 1:
        raise UsageError("analyze needs --steps >= 1")
    r1 = one_step_report(kernel)
    reports = {1: r1}
    if k > 1:
        reports[k] = coefficients_k_step(kernel, k, manifest.search())
    rk = reports[k]
    cols = ["steps", "coefficient", "lower", "upper", "width", "certification",
            "witness_x", "witness_y", "witness_value", "witness_mu", "witness_nu"]
    rows = [_witness_row(r, c) for r in reports.values() for c in ("alpha", "lambda")]
    summary = {"kernel": kernel.name, "fingerprint": kernel.fingerprint,
               "regime_1": r1.regime, f"regime_{k}": rk.regime,
               f"regime_{k}_indicative": rk.indicative_regime,
               "converged": rk.converged, "evaluations": rk.evaluations,
               "lipschitz": rk.lipschitz}
    if k == 2:
        cls = classify(r1, rk)
        summary["guarantee"] = cls.summary
        summary["guarantee_basis"] = cls.label
    notes = list(rk.notes) + _claim_notes(claims, reports)
    return Artifact(cols, rows, summary, notes)


def cmd_iterate(manifest):
    kernel, _ = load_kernel(manifest)
    traj = iterate(kernel, _law(manifest.mu0, kernel.size), manifest.n_steps)
    cols = ["n", "tv_step"] + [f"p{i + 1}" for i in range(kernel.size)]
    rows = [[n, None if n == 0 else float(traj.tv_deltas[n - 1]), *law.tolist()]
            for n, law in enumerate(traj.laws)]
    return Artifact(cols, rows, {"kernel": kernel.name})


def _starts(manifest, size):
    if manifest.starts is None:
        return default_starts(size)
    if manifest.starts == "vertices":
        return np.eye(size)
    if manifest.starts == "uniform":
        return np.full((1, size), 1.0 / size)
    if manifest.starts == "file":
        with open(manifest.starts_file, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"starts file: {exc}") from None
        try:
            return np.array([as_distribution(s, size) for s in data])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"starts file: {exc}") from None
    raise UsageError(f"unknown --starts {manifest.starts!r}")


def cmd_invariant(manifest):
    kernel, _ = load_kernel(manifest)
    res = invariant(kernel, _starts(manifest, kernel.size), manifest.tol, manifest.max_iters)
    cols = ["state", "pi"]
    rows = [[i + 1, p] for i, p in enumerate(res.pi.tolist())]
    summary = {"kernel": kernel.name, "starts": len(res.starts), "iterations": res.iterations,
               "residual": res.residual, "max_pairwise_gap": res.max_pairwise_gap}
    return Artifact(cols, rows, summary)


def cmd_audit(manifest):
    kernel, _ = load_kernel(manifest)
    r1 = one_step_report(kernel)
    r2 = coefficients_k_step(kernel, 2, manifest.search())
    alpha2, lambda2, lambda1, branches = certified_rates(r2, r1)
    mu0 = _law(manifest.mu0, kernel.size)
    nu0 = None if manifest.nu0 is None else _law(manifest.nu0, kernel.size)
    pi = None
    if nu0 is None:
        pi = invariant(kernel, tol=manifest.tol, max_iters=manifest.max_iters).pi
    audit = audit_convergence(kernel, mu0, r2, r1, manifest.n_steps, pi=pi, nu0=nu0)
    cols = ["n", "observed", "bound", "slack", "satisfied"]
    rows = [[a.n, a.observed, a.bound, a.slack, a.satisfied] for a in audit]
    bad = sum(not a.satisfied for a in audit)
    summary = {"kernel": kernel.name, "target": "pi" if nu0 is None else "nu_n",
               "alpha_2_lower": alpha2, "lambda_2_upper": lambda2, "lambda_1_upper": lambda1,
               "branches": list(branches), "violations": bad}
    art = Artifact(cols, rows, summary)
    art.status = 1 if bad else 0
    return art


def cmd_simulate(manifest):
    kernel, _ = load_kernel(manifest)
    curve = law_error_curve(kernel, _law(manifest.mu0, kernel.size), manifest.particles,
                            manifest.n_steps, manifest.replicas, manifest.seed)
    cols = ["N", "steps", "mean_tv", "std_tv", "replicas", "seed"]
    rows = [[r.N, r.steps, r.mean_tv, r.std_tv, r.replicas, r.seed] for r in curve]
    seeds = {"master": manifest.seed,
             "replica_seed": "SeedSequence([master, N, replica])",
             "step_stream": "default_rng([replica_seed, t])"}
    return Artifact(cols, rows, {"kernel": kernel.name}, seeds=seeds)


def cmd_examples(manifest):
    names = [manifest.builtin] if manifest.builtin else sorted(EXAMPLES)
    cols = ["name", "gamma", "gamma_low", "gamma_high", "states", "fingerprint", "file"]
    rows = []
    for name in names:
        gamma = manifest.gamma if manifest.gamma is not None else EXAMPLES[name][2]
        kernel, _ = builtin(name, gamma)
        lo, hi = EXAMPLES[name][1]
        path = None
        if manifest.out is not None:
            path = os.path.join(manifest.out, f"{name}.json")
        rows.append([name, gamma, lo, hi, kernel.size, kernel.fingerprint, path])
        if path is not None:
            os.makedirs(manifest.out, exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(dump_spec(kernel))
    return Artifact(cols, rows)


HANDLERS = {
    "validate": cmd_validate, "analyze": cmd_analyze, "iterate": cmd_iterate,
    "invariant": cmd_invariant, "audit": cmd_audit, "simulate": cmd_simulate,
    "examples": cmd_examples,
}


def execute(manifest):
    """Run a manifest and return ``(status, text)`` without writing anything."""
    art = HANDLERS[manifest.command](manifest)
    return art.status, render(manifest, art)


def run(manifest, stdout=None, stderr=None):
    """Run a manifest, write its report and return the exit status.

    For ``examples`` with ``--out`` the spec files go into that directory
    and the report to ``<out>/index.<format>``.
    """
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        status, text = execute(manifest)
        if manifest.out is None:
            stdout.write(text)
        else:
            target = manifest.out
            if manifest.command == "examples":
                target = os.path.join(manifest.out, f"index.{manifest.format}")
            with open(target, "w", encoding="utf-8") as fh:
                fh.write(text)
        return status
    except NLMarkovError as exc:
        print(f"nlmarkov: error: {exc}", file=stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"nlmarkov: I/O error: {exc}", file=stderr)
        return EXIT_IO


# -- argument parsing ----------------------------------------------------


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("kernel")
    src.add_argument("--builtin", choices=sorted(EXAMPLES))
    src.add_argument("--gamma", type=float)
    src.add_argument("--spec", metavar="PATH")
    common.add_argument("--steps", type=int)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH")
    search = common.add_argument_group("coefficient search")
    search.add_argument("--grid", type=int, default=20, help="lattice denominator")
    search.add_argument("--min-step", type=float, default=1e-6)
    search.add_argument("--pair-floor", type=float, default=1e-9)
    search.add_argument("--eval-cap", type=int, default=10**7)
    search.add_argument("--tolerance", type=float, default=2.5e-4,
                        help="target bracket width")
    laws = common.add_argument_group("laws and iteration")
    laws.add_argument("--mu0", type=_float_list, help="initial law, e.g. 1,0,0,0")
    laws.add_argument("--nu0", type=_float_list, help="second initial law (audit)")
    laws.add_argument("--starts", choices=("vertices", "uniform", "file"),
                      help="invariant starts (default: vertices and uniform)")
    laws.add_argument("--starts-file", metavar="PATH", help="JSON list of laws")
    laws.add_argument("--tol", type=float, default=1e-13)
    laws.add_argument("--max-iters", type=int, default=100_000)
    sim = common.add_argument_group("simulation")
    sim.add_argument("--particles", type=_int_list, default=(100, 1000, 10000),
                     help="particle counts, comma separated")
    sim.add_argument("--replicas", type=int, default=20)
    sim.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(
        prog="nlmarkov", description="Analyse finite-state nonlinear Markov chains.")
    parser.add_argument("--version", action="version", version=f"nlmarkov {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "validate": "check a kernel and list violations",
        "analyze": "one-step and k-step contraction coefficients",
        "iterate": "law trajectory",
        "invariant": "invariant law by multi-start iteration",
        "audit": "observed distances against the convergence bound",
        "simulate": "particle-approximation error curve",
        "examples": "list built-in kernels or write their spec files",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def manifest_from_args(ns):
    kw = {k: v for k, v in vars(ns).items() if k in RunManifest.__dataclass_fields__}
    return RunManifest(**kw)


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        manifest = manifest_from_args(ns)
    except NLMarkovError as exc:
        print(f"nlmarkov: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
