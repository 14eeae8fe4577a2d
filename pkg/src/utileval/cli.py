"""Command-line interface: ``utileval <command> ...``.

Exit codes: 0 success, 2 input error (unreadable or malformed data files,
unknown metric names), 3 configuration error (invalid config document or
parameter values).  JSON output carries a ``schema_version`` field.
"""
from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import compliance as _compliance
from . import montecarlo, roc
from .core import ConfusionMatrix, UtilityMatrix, utility_yield
from .errors import ConfigError, ContractViolation, InputError, UndefinedMetricError
from .fileio import (
    UtilityConfig,
    load_utility_config,
    read_curve_csv,
    read_predictions,
)
from .metrics import REGISTRY, get_metric
from .sampling import parse_seed

SCHEMA_VERSION = 1
EXIT_INPUT = 2
EXIT_CONFIG = 3


class _Group(click.Group):
    """Maps library errors onto the documented exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_INPUT)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            ctx.exit(EXIT_CONFIG)


# -- shared options and helpers ---------------------------------------------

def _utilities_option(f):
    return click.option("--utilities", "utilities", type=click.Path(dir_okay=False),
                        help="JSON config with a utility matrix or mixture.")(f)


def _format_option(f):
    return click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]),
                        default="table", show_default=True, help="Output format on stdout.")(f)


def _seed_option(f):
    return click.option("--seed", envvar="UTILEVAL_SEED", default=None,
                        help="Master seed (decimal or 0x-hex); env UTILEVAL_SEED.")(f)


def _out_option(f):
    return click.option("--out", envvar="UTILEVAL_OUT", type=click.Path(file_okay=False),
                        default=".", show_default=True,
                        help="Output directory for report files; env UTILEVAL_OUT.")(f)


def _load_config(path) -> UtilityConfig:
    return load_utility_config(path) if path else UtilityConfig()


def _utility(cfg: UtilityConfig) -> UtilityMatrix:
    U = cfg.effective_utility()
    return U if U is not None else UtilityMatrix.identity()


def _seed(flag, cfg: UtilityConfig) -> int:
    if flag is not None:
        try:
            return parse_seed(flag)
        except ContractViolation as exc:
            raise ConfigError(str(exc)) from None
    return cfg.seed if cfg.seed is not None else 0


def _metric_or_input_error(name):
    try:
        return get_metric(name)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _table(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _round6(a) -> list:
    return np.round(np.asarray(a, dtype=float), 6).tolist()


def _matrix_lines(C: ConfusionMatrix) -> str:
    e = C.entries
    return (f"  [[{e[0, 0]:.6f}, {e[0, 1]:.6f}],\n"
            f"   [{e[1, 0]:.6f}, {e[1, 1]:.6f}]]\n")


def _metric_values(C: ConfusionMatrix) -> dict[str, float | None]:
    out = {}
    for name, d in REGISTRY.items():
        try:
            out[name] = d(C)
        except UndefinedMetricError:
            out[name] = None
    return out


def _fmt(v) -> str:
    return "undefined" if v is None else f"{v:.6g}"


def _evaluate_file(path, U: UtilityMatrix) -> dict:
    p = read_predictions(path)
    if p.kind != "labels":
        raise InputError(f"{path}: evaluate needs a 'predicted_label' column "
                         "(use 'roc' for scores)")
    C = ConfusionMatrix.from_labels(p.true_labels, p.values)
    return {
        "source": str(path),
        "n": int(p.true_labels.size),
        "counts": np.rint(C.entries * C.total).astype(int).tolist(),
        "confusion": C,
        "yield": utility_yield(U, C),
        "metrics": _metric_values(C),
    }


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def cli():
    """Evaluate and rank binary classifiers by utility yield."""


# -- evaluate ---------------------------------------------------------------

@cli.command()
@click.argument("predictions", type=click.Path(dir_okay=False))
@_utilities_option
@_format_option
def evaluate(predictions, utilities, fmt):
    """Confusion matrix, utility yield and registry metrics of one classifier."""
    U = _utility(_load_config(utilities))
    r = _evaluate_file(predictions, U)
    C = r["confusion"]
    if fmt == "json":
        click.echo(_dump_json({
            "schema_version": SCHEMA_VERSION,
            "command": "evaluate",
            "source": r["source"],
            "n": r["n"],
            "counts": r["counts"],
            "confusion": _round6(C.entries),
            "utility": U.entries.tolist(),
            "yield": r["yield"],
            "metrics": r["metrics"],
        }), nl=False)
    elif fmt == "csv":
        rows = [("yield", repr(r["yield"]))]
        rows += [(k, "" if v is None else repr(v)) for k, v in r["metrics"].items()]
        click.echo(_csv_text(("quantity", "value"), rows), nl=False)
    else:
        click.echo(f"{r['source']}: {r['n']} items")
        click.echo("normalized confusion matrix (rows: predicted, columns: true):")
        click.echo(_matrix_lines(C), nl=False)
        click.echo(f"utility yield: {r['yield']!r}")
        click.echo(_table(("metric", "value"),
                          [(k, _fmt(v)) for k, v in r["metrics"].items()]), nl=False)


# -- rank -------------------------------------------------------------------

def _disagreeing_metrics(results: list[dict]) -> list[str]:
    out = []
    for name in REGISTRY:
        for i in range(len(results)):
            for j in range(i + 1, len(results)):
                a, b = results[i], results[j]
                ma, mb = a["metrics"][name], b["metrics"][name]
                if ma is None or mb is None:
                    continue
                dy, dm = b["yield"] - a["yield"], mb - ma
                if (dy > 0 and dm < 0) or (dy < 0 and dm > 0):
                    out.append(name)
                    break
            else:
                continue
            break
    return out


@cli.command()
@click.argument("predictions", nargs=-1, required=True, type=click.Path(dir_okay=False))
@_utilities_option
@_format_option
def rank(predictions, utilities, fmt):
    """Order classifiers by utility yield and flag metrics that disagree."""
    U = _utility(_load_config(utilities))
    results = [_evaluate_file(p, U) for p in predictions]
    f0s = [r["confusion"].f0 for r in results]
    if max(f0s) - min(f0s) > 1e-9:
        click.echo("warning: class frequencies differ across inputs; the comparison "
                   "assumes all classifiers were evaluated on the same test set", err=True)
    order = sorted(range(len(results)), key=lambda k: (-results[k]["yield"], k))
    ranked = [results[k] for k in order]
    disagree = _disagreeing_metrics(ranked)
    if fmt == "json":
        click.echo(_dump_json({
            "schema_version": SCHEMA_VERSION,
            "command": "rank",
            "utility": U.entries.tolist(),
            "ranking": [
                {"rank": n + 1, "source": r["source"], "yield": r["yield"],
                 "confusion": _round6(r["confusion"].entries), "metrics": r["metrics"]}
                for n, r in enumerate(ranked)
            ],
            "disagreeing_metrics": disagree,
        }), nl=False)
        return
    header = ("rank", "source", "yield", *REGISTRY)
    rows = [(n + 1, r["source"], repr(r["yield"]),
             *(_fmt(v) if fmt == "table" else ("" if v is None else repr(v))
               for v in r["metrics"].values()))
            for n, r in enumerate(ranked)]
    if fmt == "csv":
        click.echo(_csv_text(header, rows), nl=False)
    else:
        click.echo(_table(header, rows), nl=False)
        if disagree:
            click.echo("metrics disagreeing with the yield order: " + ", ".join(disagree))
        else:
            click.echo("all registry metrics agree with the yield order")


# -- simulate ---------------------------------------------------------------

def _parse_sigmas(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"--sigma expects a comma-separated list of numbers, got {text!r}")
    if not vals:
        raise ConfigError("--sigma list is empty")
    return vals


def _experiment_config(cfg: UtilityConfig, seed, pairs, sigma, prior, workers):
    exp = dict(cfg.experiment)
    if "prior_sigma" in exp:
        raise ConfigError("prior_sigma is fixed for the gaussian prior in this version")
    kw = {}
    for key in ("pairs", "prior", "workers", "chunk_size"):
        if key in exp:
            kw[key] = exp[key]
    if "sigmas" in exp:
        kw["sigmas"] = tuple(exp["sigmas"])
    if "metrics" in exp:
        kw["metrics"] = tuple(exp["metrics"])
    if pairs is not None:
        kw["pairs"] = pairs
    if sigma is not None:
        kw["sigmas"] = _parse_sigmas(sigma)
    if prior is not None:
        kw["prior"] = prior
    if workers is not None:
        kw["workers"] = workers
    kw["seed"] = _seed(seed, cfg)
    try:
        return montecarlo.ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


@cli.command()
@_utilities_option
@_seed_option
@click.option("--pairs", type=int, default=None, help="Number of classifier pairs (default 10^6).")
@click.option("--sigma", default=None, help="Comma-separated utility error levels.")
@click.option("--prior", type=click.Choice(["uniform", "gaussian"]), default=None)
@click.option("--workers", type=int, default=None, help="Worker threads (results do not depend on it).")
@_out_option
@_format_option
def simulate(utilities, seed, pairs, sigma, prior, workers, out, fmt):
    """Monte Carlo misranking fractions; writes simulate.json and simulate.csv."""
    cfg = _experiment_config(_load_config(utilities), seed, pairs, sigma, prior, workers)
    sweep = montecarlo.sweep_error_levels(cfg)
    report = sweep.report
    payload = report.to_dict()
    payload["command"] = "simulate"
    if len(sweep.sigmas) >= 2:
        payload["sweep"] = {"slope": sweep.slope, "intercept": sweep.intercept,
                            "r_squared": sweep.r_squared}
    csv_text = _csv_text(report.CSV_COLUMNS, report.csv_rows())
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "simulate.json").write_text(_dump_json(payload))
    (outdir / "simulate.csv").write_text(csv_text)
    if fmt == "json":
        click.echo(_dump_json(payload), nl=False)
    elif fmt == "csv":
        click.echo(csv_text, nl=False)
    else:
        rows = [(r.name, f"{100 * r.fraction:.3f}", f"{100 * r.stderr:.3f}", r.ties)
                for r in report.results]
        click.echo(f"prior={report.prior} pairs={report.pairs} seed={report.seed}")
        click.echo(_table(("evaluator", "misranked_%", "stderr_%", "ties"), rows), nl=False)
        click.echo(f"reports written to {outdir}")


# -- compliance -------------------------------------------------------------

def _witness_rows(U: UtilityMatrix, w) -> list[tuple]:
    u = np.asarray(U.flat())
    rows = []
    for role, C in (("higher_metric", w.first), ("higher_yield", w.second)):
        rows.append((role, *(repr(v) for v in C.flat()), repr(float(np.asarray(C.flat()) @ u))))
    return rows


@cli.command(name="compliance")
@click.argument("metrics", nargs=-1)
@click.option("--witness", is_flag=True, help="Write a reversal pair CSV per non-compliant metric.")
@click.option("--samples", type=int, default=400, show_default=True,
              help="Confusion matrices sampled per class frequency.")
@_seed_option
@_out_option
@_format_option
def compliance_cmd(metrics, witness, samples, seed, out, fmt):
    """Test whether metrics can agree with some utility yield at all class frequencies."""
    descs = [_metric_or_input_error(m) for m in metrics] or list(REGISTRY.values())
    rng_seed = _seed(seed, UtilityConfig())
    if samples < 100:
        raise ConfigError("--samples must be at least 100")
    reports = [_compliance.compliance_verdict(d, samples=samples, rng_seed=rng_seed)
               for d in descs]
    written = []
    if witness:
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        for r in reports:
            for U, w in r.witnesses:
                path = outdir / f"witness_{r.metric}.csv"
                path.write_text(_csv_text(("role", "c00", "c01", "c10", "c11", "yield"),
                                          _witness_rows(U, w)))
                written.append(str(path))
    if fmt == "json":
        click.echo(_dump_json({
            "schema_version": SCHEMA_VERSION,
            "command": "compliance",
            "seed": rng_seed,
            "results": [
                {"metric": r.metric, "verdict": r.verdict, "declared": r.declared_compliant,
                 "direction_deg": r.direction_deg,
                 "coefficients": list(r.coefficients) if r.coefficients else None,
                 "pairs_tested": r.pairs_tested,
                 "witnesses": [{"utility": U.entries.tolist(), "f0": w.f0,
                                "higher_metric": _round6(w.first.entries),
                                "higher_yield": _round6(w.second.entries)}
                               for U, w in r.witnesses]}
                for r in reports
            ],
        }), nl=False)
        return
    rows = [(r.metric, r.verdict, "compliant" if r.declared_compliant else "non-compliant",
             "" if r.coefficients is None else "X=%.4g Y=%.4g" % r.coefficients)
            for r in reports]
    header = ("metric", "verdict", "declared", "direction")
    click.echo((_csv_text if fmt == "csv" else _table)(header, rows), nl=False)
    if fmt == "table":
        for p in written:
            click.echo(f"witness written to {p}")


# -- roc --------------------------------------------------------------------

def _load_curve(path):
    """Returns ``(curve, class-0 share or None)`` from a scores or curve CSV."""
    with open(path) as fh:
        first = fh.readline().strip().lower().replace(" ", "")
    if first == "fpr,tpr":
        return read_curve_csv(path), None
    p = read_predictions(path)
    if p.kind != "scores":
        raise InputError(f"{path}: roc needs a 'score' column or an 'fpr,tpr' curve")
    return roc.curve_from_scores(p.true_labels, p.values), float(np.mean(p.true_labels == 0))


@cli.command(name="roc")
@click.argument("inputs", nargs=-1, type=click.Path(dir_okay=False))
@click.option("--fixture", is_flag=True, help="Add the shipped AUC-reversal curve pair (and its utility and balance unless configured).")
@click.option("--balance", type=float, default=None, help="Class-0 share B of the target population.")
@_utilities_option
@click.option("--svg", type=click.Path(dir_okay=False), default=None, help="Plot curves to an SVG file.")
@_format_option
def roc_cmd(inputs, fixture, balance, utilities, svg, fmt):
    """AUC, utility-optimal operating point, and tangent ranking of ROC curves."""
    cfg = _load_config(utilities)
    U = _utility(cfg)
    if fixture and cfg.effective_utility() is None:
        # the shipped pair is built for this context
        U = roc.FIXTURE_CONTEXT.utility
        if balance is None and cfg.balance is None:
            balance = roc.FIXTURE_CONTEXT.balance
    curves, names, shares = [], [], []
    for path in inputs:
        c, share = _load_curve(path)
        curves.append(c)
        names.append(str(path))
        shares.append(share)
    if fixture:
        a, b, _ = roc.reversal_fixture()
        curves += [a, b]
        names += ["fixture:a", "fixture:b"]
    if not curves:
        raise InputError("no ROC inputs given")
    B = balance if balance is not None else cfg.balance
    if B is None:
        known = [s for s in shares if s is not None]
        if not known:
            raise ConfigError("class balance unknown: pass --balance or set 'balance' in the config")
        B = known[0]
        if any(abs(s - B) > 1e-9 for s in known):
            click.echo("warning: inputs have different class-0 shares; using the first", err=True)
    try:
        ctx = roc.OperatingContext(U, B)
    except ContractViolation as exc:
        raise ConfigError(str(exc)) from None
    ops = [roc.optimal_operating_point(c, ctx) for c in curves]
    aucs = [roc.auc(c) for c in curves]
    ranking = roc.compare_by_tangent(curves, ctx) if len(curves) > 1 else []
    warnings = []
    for i in range(len(curves)):
        for j in range(len(curves)):
            if aucs[i] > aucs[j] and ops[i].utility_yield < ops[j].utility_yield - 1e-12:
                warnings.append(f"AUC ranks {names[i]} above {names[j]}, "
                                f"but utility yield ranks {names[j]} first")
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    if svg:
        _plot_roc(svg, curves, names, ops, ctx)
    entries = [{"source": n, "auc": a, "fpr": op.fpr, "tpr": op.tpr, "threshold": op.threshold,
                "index": op.index, "yield": op.utility_yield}
               for n, a, op in zip(names, aucs, ops)]
    if fmt == "json":
        click.echo(_dump_json({
            "schema_version": SCHEMA_VERSION,
            "command": "roc",
            "utility": U.entries.tolist(),
            "balance": B,
            "slope": ctx.slope if np.isfinite(ctx.slope) else None,
            "curves": [{**e, "threshold": None if e["threshold"] is None
                        or not np.isfinite(e["threshold"]) else e["threshold"]}
                       for e in entries],
            "ranking": [{"rank": r.rank, "source": names[r.index], "intercept": r.intercept,
                         "yield": r.utility_yield} for r in ranking],
            "auc_disagreements": warnings,
        }), nl=False)
        return
    header = ("source", "auc", "f_opt", "t_opt", "threshold", "yield")
    rows = [(e["source"], repr(e["auc"]), repr(e["fpr"]), repr(e["tpr"]),
             "" if e["threshold"] is None else repr(e["threshold"]), repr(e["yield"]))
            for e in entries]
    if fmt == "csv":
        click.echo(_csv_text(header, rows), nl=False)
        return
    click.echo(f"balance B={B!r}  iso-utility slope={ctx.slope!r}")
    click.echo(_table(header, rows), nl=False)
    if ranking:
        click.echo("tangent ranking (highest intercept first):")
        click.echo(_table(("rank", "source", "intercept", "yield"),
                          [(r.rank, names[r.index], "" if r.intercept is None
                            else repr(r.intercept), repr(r.utility_yield)) for r in ranking]),
                   nl=False)


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("--svg needs matplotlib (pip install 'artifact[plot]')") from None
    matplotlib.use("svg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "utileval"
    return plt


def _plot_roc(path, curves, names, ops, ctx):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))
    f = np.linspace(0, 1, 2)
    for c, n, op in zip(curves, names, ops):
        line, = ax.plot(c.fpr, c.tpr, label=n)
        if np.isfinite(ctx.slope):
            ax.plot(f, op.tpr + ctx.slope * (f - op.fpr), ls=":", color=line.get_color())
        ax.plot([op.fpr], [op.tpr], "o", color=line.get_color())
    ax.plot([0, 1], [0, 1], color="0.7", lw=0.8)
    ax.set(xlim=(0, 1), ylim=(0, 1), xlabel="false-positive rate", ylabel="true-positive rate")
    ax.legend(loc="lower right")
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


# -- scatter ----------------------------------------------------------------

@cli.command()
@click.option("--metric", "metric_name", required=True, help="Registry metric name.")
@click.option("--f0", type=float, default=0.5, show_default=True, help="Class-0 share.")
@click.option("-n", "--samples", type=int, default=10_000, show_default=True)
@_utilities_option
@_seed_option
@_out_option
@click.option("--svg", is_flag=True, help="Also write scatter.svg.")
@_format_option
def scatter(metric_name, f0, samples, utilities, seed, out, svg, fmt):
    """Metric score against utility yield for sampled classifiers; writes scatter.csv."""
    m = _metric_or_input_error(metric_name)
    cfg = _load_config(utilities)
    U = _utility(cfg)
    if not 0 < f0 < 1 or samples < 2:
        raise ConfigError("--f0 must lie in (0, 1) and --samples must be at least 2")
    ds = montecarlo.scatter_dataset(U, m, f0, samples, seed=_seed(seed, cfg))
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    text = _csv_text(ds.CSV_COLUMNS, ds.rows())
    (outdir / "scatter.csv").write_text(text)
    if svg:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(ds.yields, ds.scores, ".", ms=1.5, color="0.4")
        for w in ds.witnesses:
            pts = [(float(np.asarray(C.flat()) @ np.asarray(U.flat())), m.vector(*C.flat()))
                   for C in (w.first, w.second)]
            ax.plot(*zip(*pts), "o-", color="tab:red")
        ax.set(xlabel="utility yield", ylabel=m.name)
        fig.savefig(outdir / "scatter.svg", metadata={"Date": None})
        plt.close(fig)
    summary = {"schema_version": SCHEMA_VERSION, "command": "scatter", "metric": m.name,
               "f0": f0, "samples": samples, "utility": U.entries.tolist(),
               "discordant_fraction": ds.discordant_fraction() if samples <= 4000 else None,
               "max_line_residual": ds.max_line_residual(), "witnesses": len(ds.witnesses)}
    if fmt == "json":
        click.echo(_dump_json(summary), nl=False)
    elif fmt == "csv":
        click.echo(text, nl=False)
    else:
        click.echo(f"{m.name} vs yield at f0={f0}: max residual from a line "
                   f"{summary['max_line_residual']:.3g}, {len(ds.witnesses)} reversal pair(s)")
        click.echo(f"data written to {outdir / 'scatter.csv'}")


def main(argv=None):
    cli.main(args=argv, prog_name="utileval")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
