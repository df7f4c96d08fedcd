"""Command-line entry point: ``bdspaces build | verify | dump | bench``."""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from pathlib import Path
from typing import Optional

import click

from . import config as cfgmod
from . import original as orig
from .engine import BudgetExceeded, ConstructionError, biorthogonal_vector, projection_matrix
from .linalg import format_rational
from .report import jsonable
from .serialize import Cache, encode_key, encode_tau
from .shift import word_for
from .suites import UnknownSuite, run_suites, suites_for

DUMPS = ("gamma", "dstar", "cstar", "projection", "dvectors", "operators")


def parse_steps(text: Optional[str]) -> Optional[list[int]]:
    """'all', 'a..b' or a comma list of step numbers in 1..8."""
    if text is None or text == "all":
        return None
    steps: list[int] = []
    try:
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                steps.extend(range(int(lo), int(hi) + 1))
            else:
                steps.append(int(part))
    except ValueError:
        raise click.BadParameter(f"cannot read steps {text!r}; use 'all', '1..8' or '1,3,5'")
    if not steps or any(not 1 <= s <= 8 for s in steps):
        raise click.BadParameter("steps must lie in 1..8")
    return sorted(set(steps))


def _overrides(ctx_obj: dict, space, rank, k, toy, a, b, lam, seed) -> dict:
    ov: dict = {}
    for key in ("out", "format", "jobs", "budget"):
        if ctx_obj.get(key) is not None:
            ov[key] = ctx_obj[key]
    if space is not None:
        ov["space"] = space
    ah: dict = {}
    if k is not None:
        ah["kind"] = f"k:{k}"
        ov.setdefault("space", "xk")
    if toy is not None:
        ah["toy_mode"] = toy
    if seed is not None:
        ah["net"] = {"seed": seed}
    if ah:
        ov["ah"] = ah
    o = {key: v for key, v in (("a", a), ("b", b), ("lam", lam)) if v is not None}
    if o:
        ov["original"] = o
    if rank is not None:
        ov["_rank"] = rank
    return ov


def _load(ctx: click.Context, **opts) -> cfgmod.RunConfig:
    obj = ctx.obj
    ov = _overrides(obj, **opts)
    rank = ov.pop("_rank", None)
    try:
        return cfgmod.load_config(obj.get("config"), ov, rank)
    except cfgmod.ConfigError as exc:
        raise click.UsageError(str(exc))


def space_options(f):
    opts = [
        click.option("--space", type=click.Choice(cfgmod.SPACES), default=None, help="Which space to build."),
        click.option("--rank", type=int, default=None, help="Build up to this rank."),
        click.option("--k", type=int, default=None, help="Nilpotency order for the xk space."),
        click.option("--toy/--no-toy", default=None, help="Toy parameter mode for xk/xinf."),
        click.option("--a", default=None, help="Original BD parameter a (exact 'p/q')."),
        click.option("--b", default=None, help="Original BD parameter b (exact 'p/q')."),
        click.option("--lam", default=None, help="Original BD lambda for a = 1 (exact 'p/q')."),
        click.option("--seed", type=int, default=None, help="Net sampling seed for xk/xinf."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _get_built(cfg: cfgmod.RunConfig) -> cfgmod.Built:
    try:
        return cfgmod.build_cached(cfg)
    except (BudgetExceeded, ConstructionError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON run configuration.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory for reports and dumps.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None, help="Dump format.")
@click.option("--jobs", type=click.IntRange(min=1), default=None, help="Worker threads for c* computation.")
@click.option("--budget", type=click.IntRange(min=1), default=None, help="Maximum number of elements.")
@click.pass_context
def main(ctx, config_path, out, fmt, jobs, budget):
    """Build and verify finite-rank Bourgain-Delbaen spaces exactly."""
    ctx.obj = {"config": config_path, "out": out, "format": fmt, "jobs": jobs, "budget": budget}


@main.command()
@space_options
@click.pass_context
def build(ctx, **opts):
    """Build a space into the cache (no work on a cache hit)."""
    cfg = _load(ctx, **opts)
    built = _get_built(cfg)
    click.echo(
        json.dumps(
            {
                "space": cfg.space,
                "config_hash": cfg.digest,
                "max_rank": built.space.max_rank,
                "elements": len(built.space),
                "cached": built.from_cache,
                "path": str(Cache().path(cfg.digest)),
            }
        )
    )


@main.command()
@space_options
@click.option("--suite", "suites", multiple=True, help="Suite to run (repeatable); default all.")
@click.option("--steps", default=None, help="r2 steps: 'all', '1..8' or a comma list.")
@click.pass_context
def verify(ctx, suites, steps, **opts):
    """Run verification suites; exit status 1 iff a non-audit check fails."""
    cfg = _load(ctx, **opts)
    step_list = parse_steps(steps)
    if step_list is not None and not suites:
        suites = ("steps",)
    try:
        names = list(suites) or list(suites_for(cfg.space))
        for n in names:
            if n not in suites_for(cfg.space):
                raise UnknownSuite(n)
    except UnknownSuite as exc:
        raise click.UsageError(f"unknown suite {exc.args[0]!r}; choose from {', '.join(suites_for(cfg.space))}")
    built = _get_built(cfg)
    reports = run_suites(built, names, step_list)
    cfg.out.mkdir(parents=True, exist_ok=True)
    failed = False
    for rep in reports:
        (cfg.out / f"report-{cfg.space}-{rep.suite}.json").write_text(rep.to_json(indent=1, sort_keys=True) + "\n")
        for c in rep.checks:
            click.echo(f"{c.status:11s} {rep.suite}:{c.id}")
        failed = failed or not rep.ok
    click.echo("FAIL" if failed else "OK")
    sys.exit(1 if failed else 0)


def _rows(built: cfgmod.Built, what: str, q: Optional[int], n: Optional[int]):
    """Header and rows for a dump; every value is an int or exact 'p/q' string."""
    sp = built.space
    n = sp.max_rank if n is None else n
    if not 0 <= n <= sp.max_rank:
        raise click.BadParameter(f"--n must lie in 0..{sp.max_rank}")
    ids = range(sp.size(n))
    if what == "gamma":
        return ["id", "rank", "key", "tau"], [
            [g, sp.rank(g), json.dumps(encode_key(sp.keys[g])), json.dumps(encode_tau(sp.taus[g]), sort_keys=True)] for g in ids
        ]
    if what in ("dstar", "cstar"):
        get = sp.dstar if what == "dstar" else (lambda g: sp.cstar[g])
        return ["id", "gamma", "value"], [[g, h, format_rational(v)] for g in ids for h, v in sorted(get(g).items())]
    if what == "projection":
        q = n if q is None else q
        if not 0 <= q <= n:
            raise click.BadParameter(f"--q must lie in 0..{n}")
        m = projection_matrix(sp, q, n)
        return ["row"] + [str(j) for j in ids], [[i] + [format_rational(v) for v in row] for i, row in enumerate(m.to_dense())]
    if what == "dvectors":
        return ["id"] + [str(j) for j in ids], [[g] + biorthogonal_vector(sp, g, n).to_list() for g in ids]
    if what == "operators":
        if built.ah is not None:
            ah = built.ah
            return ["id", "G", "sigma", "Sigma", "age", "weight_index"], [
                [g, "" if ah.G[g] is None else ah.G[g], ah.sigma[g], " ".join(map(str, sorted(ah.Sigma[g]))), ah.age[g], ah.widx[g]]
                for g in ids
            ]
        if built.cfg.space == "original":
            ranks = [r for r in range(2, sp.max_rank) if sp.size(r + 1) <= sp.size(n)]
            bases = orig.canonical_bases(sp, ranks)
            rows = []
            for r in ranks:
                op = orig.basic_operator(sp, bases[r], n)
                rows.extend([r, g, op.F[g], op.sign[g]] for g in ids)
            return ["operator_rank", "id", "F", "sign"], rows
        return ["n", "sigma_power", "tau_power"], [[g, *word_for(g)] for g in ids]
    raise click.BadParameter(f"unknown artifact {what!r}")


def render(header, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"columns": header, "rows": jsonable(rows)}, separators=(",", ":")) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


@main.command()
@click.argument("what", type=click.Choice(DUMPS))
@space_options
@click.option("--q", type=int, default=None, help="Projection rank for 'projection'.")
@click.option("--n", type=int, default=None, help="Window rank (default: max_rank).")
@click.pass_context
def dump(ctx, what, q, n, **opts):
    """Export gamma tables, functionals, matrices, d-vectors or operator tables."""
    cfg = _load(ctx, **opts)
    built = _get_built(cfg)
    header, rows = _rows(built, what, q, n)
    text = render(header, rows, cfg.format)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / f"{cfg.space}-{what}.{cfg.format}"
    path.write_text(text)
    click.echo(str(path))


@main.command()
@space_options
@click.option("--suite", "suites", multiple=True, help="Suites to time (default all).")
@click.pass_context
def bench(ctx, suites, **opts):
    """Time a fresh build (bypassing the cache) and each suite."""
    cfg = _load(ctx, **opts)
    t0 = time.perf_counter()
    try:
        built = cfgmod.build(cfg)
    except (BudgetExceeded, ConstructionError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    build_ms = int((time.perf_counter() - t0) * 1000)
    try:
        reports = run_suites(built, suites or None)
    except UnknownSuite as exc:
        raise click.UsageError(str(exc))
    out = {
        "space": cfg.space,
        "elements": len(built.space),
        "jobs": cfg.jobs,
        "build_ms": build_ms,
        "suites": {r.suite: {"elapsed_ms": r.elapsed_ms, "ok": r.ok} for r in reports},
    }
    click.echo(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
