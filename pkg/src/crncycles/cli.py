"""Command-line front end.

Four subcommands: ``synthesize`` (emit the CRN / system families),
``simulate`` (trajectory ensembles to CSV), ``verify`` (limit-cycle
certification with CI-stable exit codes) and ``replicate-figure`` (the six
canned demonstration configurations).  All outputs are data files (CSV/JSON/
text); plotting is left to external tools.

Exit codes: 0 success (and certification pass), 1 usage/configuration error,
2 certification failure.
"""

from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import click
import numpy as np

from .crn import MergePolicy, max_order
from .cycles import KINDS, certification_seeds, certify
from .figures import FIGURE_IDS, run_figure
from .formats import (
    crn_to_json_dict,
    crn_to_text,
    system_to_json_dict,
    write_atomic,
    write_json_atomic,
)
from .integration import IntegratorSettings, batch_integrate
from .systems import (
    CenterField,
    CenterSet,
    Family,
    bimolecular_crn,
    default_centers,
    quadratized_lift,
    quadratized_system,
    seventh_order_crn,
    slow_manifold_v,
    two_species_system,
)

SIM_KINDS = KINDS + ("reciprocal",)


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one CLI invocation, recorded in every output."""

    command: str
    K: int
    eps: float
    delta: float
    centers: list | None
    seeds: str | None
    t_end: float
    rel_tol: float
    abs_tol: float
    output_dir: str
    format: str = "both"

    def as_dict(self) -> dict:
        return asdict(self)


def _resolve_output_dir(flag_value: str) -> Path:
    path = Path(os.environ.get("LCF_OUTPUT_DIR", flag_value))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_centers(text: str | None, K: int) -> CenterSet | None:
    if text is None:
        return None
    vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    if len(vals) != 2 * K:
        raise click.UsageError(
            f"--centers needs 2K={2*K} values a1,b1,...,aK,bK; got {len(vals)}"
        )
    return CenterSet(tuple(vals[0::2]), tuple(vals[1::2]))


def _settings(t_end, rel_tol, abs_tol, max_step, dense_stride) -> IntegratorSettings:
    try:
        return IntegratorSettings(
            rel_tol=rel_tol,
            abs_tol=abs_tol,
            max_step=max_step,
            t_end=t_end,
            dense_stride=dense_stride,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _integration_options(fn):
    for dec in (
        click.option("--t-end", type=float, default=100.0, show_default=True),
        click.option("--rel-tol", type=float, default=1e-9, show_default=True),
        click.option("--abs-tol", type=float, default=1e-11, show_default=True),
        click.option("--max-step", type=float, default=0.1, show_default=True),
        click.option("--dense-stride", type=float, default=0.01, show_default=True),
        click.option("--max-workers", type=int, default=None, help="Thread count for batches."),
    ):
        fn = dec(fn)
    return fn


@click.group()
def cli():
    """Build and certify reaction networks with many stable limit cycles."""


@cli.command()
@click.option("--theorem", type=click.Choice(["1", "2", "3"]), required=True,
              help="1: K+2 species / order <= 7; 2: bimolecular; 3: two species.")
@click.option("--K", "K", type=int, required=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.01, show_default=True)
@click.option("--centers", type=str, default=None,
              help="Explicit centers a1,b1,...,aK,bK (default: 8iK placement).")
@click.option("--merge-policy",
              type=click.Choice([p.value for p in MergePolicy]),
              default=MergePolicy.MERGE_SHARED_REACTANTS.value, show_default=True,
              help="Reaction realization for the order-7 network.")
@click.option("--format", "fmt", type=click.Choice(["text", "json", "both"]),
              default="both", show_default=True)
@click.option("--output-dir", type=str, default="out", show_default=True,
              help="Env LCF_OUTPUT_DIR overrides this flag.")
def synthesize(theorem, K, eps, delta, centers, merge_policy, fmt, output_dir):
    """Write a limit-cycle CRN (theorem 1/2) or polynomial system (3)."""
    if K < 1:
        raise click.UsageError("--K must be >= 1")
    if eps <= 0 or delta <= 0:
        raise click.UsageError("--eps and --delta must be positive")
    out = _resolve_output_dir(output_dir)
    cset = _parse_centers(centers, K)
    if theorem == "3":
        sys_ = two_species_system(cset or default_centers(K))
        path = out / f"two_species_K{K}.json"
        write_json_atomic(path, system_to_json_dict(sys_))
        click.echo(f"variables=2 degree={sys_.max_degree()} terms={sys_.term_count}")
        click.echo(f"wrote {path}")
        return
    if theorem == "1":
        crn = seventh_order_crn(K, eps, cset, MergePolicy(merge_policy))
        stem = f"seventh_order_K{K}"
    else:
        crn = bimolecular_crn(K, eps, delta, cset)
        stem = f"bimolecular_K{K}"
    click.echo(
        f"species={crn.n_species} reactions={crn.n_reactions} max_order={max_order(crn)}"
    )
    if fmt in ("text", "both"):
        path = out / f"{stem}.crn"
        write_atomic(path, crn_to_text(crn))
        click.echo(f"wrote {path}")
    if fmt in ("json", "both"):
        path = out / f"{stem}.json"
        write_json_atomic(path, crn_to_json_dict(crn))
        click.echo(f"wrote {path}")


def _simulation_field(kind: str, centers: CenterSet, eps: float, delta: float):
    if kind == "reciprocal":
        return CenterField(Family.RECIPROCAL, centers)
    if kind == "quadratized":
        return quadratized_system(centers.K, eps, delta, centers)
    if kind == "two-species":
        return CenterField(Family.RESCALED_TWO_SPECIES, centers)
    fam = {
        "planar": Family.PLANAR,
        "xfactored-planar": Family.XFACTOR_PLANAR,
        "fast-slow": Family.FAST_SLOW,
        "factored": Family.XFACTOR_FAST_SLOW,
    }[kind]
    return CenterField(fam, centers, eps)


def _lift_rows(kind, centers, rows, v_init, c_scale):
    dim = 2 if kind in ("planar", "xfactored-planar", "two-species") else (
        7 * centers.K + 14 if kind == "quadratized" else centers.K + 2
    )
    seeds = []
    for row in rows:
        row = np.asarray(row, dtype=float)
        if row.shape[0] == dim:
            seeds.append(row)
            continue
        if row.shape[0] != 2:
            raise click.UsageError(
                f"seed rows must have 2 or {dim} values for kind {kind}; got {row.shape[0]}"
            )
        x, y = row
        if dim == 2:
            seeds.append(row)
            continue
        if v_init == "one":
            v = np.ones(centers.K)
        else:
            v = slow_manifold_v(centers, x, y)
            if v_init == "scaled":
                v = c_scale * v
        if kind == "quadratized":
            seeds.append(quadratized_lift(centers, x, y, v))
        else:
            seeds.append(np.array([x, y, *v]))
    return seeds


@cli.command()
@click.option("--kind", type=click.Choice(SIM_KINDS), required=True)
@click.option("--K", "K", type=int, required=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.01, show_default=True)
@click.option("--centers", type=str, default=None)
@click.option("--seeds", "seeds_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="CSV of seed rows: x,y or one full state per line.")
@click.option("--v-init", type=click.Choice(["manifold", "scaled", "one"]),
              default="manifold", show_default=True,
              help="How 2-component seed rows are lifted to the extra variables.")
@click.option("--c", "c_scale", type=float, default=1.0, show_default=True,
              help="Scale for --v-init scaled (extra vars start at c * rest value).")
@_integration_options
@click.option("--output-dir", type=str, default="out", show_default=True)
def simulate(kind, K, eps, delta, centers, seeds_file, v_init, c_scale,
             t_end, rel_tol, abs_tol, max_step, dense_stride, max_workers, output_dir):
    """Integrate a seed ensemble; one CSV per seed plus an index JSON."""
    if K < 1:
        raise click.UsageError("--K must be >= 1")
    out = _resolve_output_dir(output_dir)
    cset = _parse_centers(centers, K) or default_centers(K)
    settings = _settings(t_end, rel_tol, abs_tol, max_step, dense_stride)
    field = _simulation_field(kind, cset, eps, delta)

    if seeds_file is None:
        seeds = certification_seeds(kind if kind != "reciprocal" else "fast-slow", cset)
        if kind == "reciprocal":
            pass  # same lift: u starts on the defining values
    else:
        rows = [
            [float(v) for v in line.split(",")]
            for line in Path(seeds_file).read_text().splitlines()
            if line.strip() and not line.startswith("#")
        ]
        seeds = _lift_rows(kind, cset, rows, v_init, c_scale)

    results = batch_integrate(field, seeds, settings, max_workers=max_workers)
    entries = []
    for i, res in enumerate(results):
        name = f"trajectory_{i:03d}.csv"
        entry = {"index": i, "seed": list(map(float, res.seed)), "file": None,
                 "status": "error", "error": res.error, "final_state": None}
        if res.ok:
            write_atomic(out / name, res.trajectory.to_csv())
            entry.update(
                file=name,
                status=res.trajectory.meta.status,
                error=None,
                final_state=[float(v) for v in res.trajectory.final_state],
                accepted_steps=res.trajectory.meta.accepted_steps,
            )
        entries.append(entry)
    config = RunConfig(
        command="simulate", K=K, eps=eps, delta=delta, centers=cset.pairs(),
        seeds=seeds_file, t_end=t_end, rel_tol=rel_tol, abs_tol=abs_tol,
        output_dir=str(out),
    )
    index = {"config": config.as_dict(), "kind": kind, "entries": entries}
    write_json_atomic(out / "index.json", index)
    n_ok = sum(1 for e in entries if e["error"] is None)
    click.echo(f"simulated {len(entries)} seeds ({n_ok} ok) -> {out}")
    if entries and n_ok == 0:
        sys.exit(2)


@cli.command()
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("--K", "K", type=int, required=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.01, show_default=True)
@click.option("--centers", type=str, default=None)
@click.option("--cluster-tol", type=float, default=0.3, show_default=True)
@_integration_options
@click.option("--output-dir", type=str, default="out", show_default=True)
def verify(kind, K, eps, delta, centers, cluster_tol,
           t_end, rel_tol, abs_tol, max_step, dense_stride, max_workers, output_dir):
    """Certify the K-cycle claim; exit 0 on pass, 2 on failure."""
    if K < 1:
        raise click.UsageError("--K must be >= 1")
    out = _resolve_output_dir(output_dir)
    cset = _parse_centers(centers, K)
    settings = _settings(t_end, rel_tol, abs_tol, max_step, dense_stride)
    report = certify(
        kind, K, eps=eps, delta=delta, centers=cset, settings=settings,
        cluster_tol=cluster_tol, max_workers=max_workers,
    )
    path = out / "certification.json"
    write_json_atomic(path, report.to_json_dict())
    for a in report.annuli:
        click.echo(
            f"annulus {a.index}: outer_flux={a.outer_flux:.6g} "
            f"inner_flux={a.inner_flux:.6g} min_field_mag={a.min_field_mag:.6g} "
            f"{'pass' if a.passed else 'FAIL'}"
        )
    for c in report.cycles:
        click.echo(
            f"cycle: period={c.period:.6g} annulus={c.containing_annulus} "
            f"basin={c.basin_count}"
        )
    click.echo(f"cycles={len(report.cycles)} verdict={'pass' if report.verdict else 'FAIL'}")
    click.echo(f"wrote {path}")
    if not report.verdict:
        sys.exit(2)


@cli.command("replicate-figure")
@click.argument("figure_id", type=click.Choice(FIGURE_IDS))
@_integration_options
@click.option("--output-dir", type=str, default="out", show_default=True)
def replicate_figure(figure_id, t_end, rel_tol, abs_tol, max_step, dense_stride,
                     max_workers, output_dir):
    """Re-run a canned demonstration configuration and emit its data bundle."""
    out = _resolve_output_dir(output_dir) / f"figure-{figure_id}"
    out.mkdir(parents=True, exist_ok=True)
    settings = _settings(t_end, rel_tol, abs_tol, max_step, dense_stride)
    t0 = time.perf_counter()
    result = run_figure(figure_id, settings, max_workers=max_workers)
    elapsed = time.perf_counter() - t0
    for i, res in enumerate(result.results):
        if res.ok:
            write_atomic(out / f"trajectory_{i:03d}.csv", res.trajectory.to_csv())
    cycles = [
        {
            "period": c.period,
            "basin_count": c.basin_count,
            "loop_xy": np.asarray(c.loop_xy).tolist(),
        }
        for c in result.cycles
    ]
    write_json_atomic(out / "cycles.json", cycles)
    summary = result.summary_dict()
    summary["runtime_s"] = elapsed
    write_json_atomic(out / "summary.json", summary)
    click.echo(
        f"figure={figure_id} cycle_count={result.cycle_count} "
        f"outside_cycle_count={result.outside_cycle_count} "
        f"fixed_points={len(result.fixed_points)} runtime={elapsed:.1f}s"
    )
    click.echo(f"wrote {out}")


def main(argv=None):
    """Entry point with the documented exit-code contract."""
    try:
        return cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)


if __name__ == "__main__":
    main()
