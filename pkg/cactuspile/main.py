import csv
import functools
import io
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

import click
from pydantic import BaseModel, ValidationError

from cactuspile.config import settings
from cactuspile.errors import CactusError, InputError, VerificationMismatch
from cactuspile.services import experiment_service
from cactuspile.store import result_store

logger = logging.getLogger(__name__)


def handle_errors(command: Callable) -> Callable:
    """Map domain errors to exit codes: 1 mismatch, 2 size guard, 3 input."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except CactusError as e:
            click.echo(f"error: {e.detail}", err=True)
            sys.exit(e.exit_code)
        except (ValidationError, json.JSONDecodeError) as e:
            click.echo(f"error: invalid input: {e}", err=True)
            sys.exit(InputError.exit_code)

    return wrapper


def common_options(command: Callable) -> Callable:
    command = click.option("--out", "out", type=str, default=None,
                           help="Write the output to FILE plus FILE.manifest.json")(command)
    command = click.option("--workers", type=int, default=None,
                           help="Worker processes for brute-force sweeps")(command)
    command = click.option("--json", "as_json", is_flag=True, help="Machine-readable output")(command)
    return command


def _configure(as_json: bool, workers: Optional[int]) -> None:
    experiment_service.workers = settings.WORKERS if workers is None else workers
    experiment_service.progress = not as_json


def _parse_cells(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"cell list {text!r} must be comma-separated integers") from None


def _emit(command: str, response: BaseModel, as_json: bool, out: Optional[str],
          parameters: Dict[str, Any], text: str, seed: Optional[int] = None) -> None:
    content = response.model_dump_json(indent=2) if as_json else text
    result_store.write(command, content, out=out, parameters=parameters, seed=seed)


def _fail_unless(response: BaseModel) -> None:
    if not getattr(response, "success", True):
        raise VerificationMismatch(response.error or response.message)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log progress at DEBUG level")
def cli(verbose: bool):
    """Exact enumeration and simulation for the sandpile on the expanded cactus."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@cli.command("verify-tables")
@click.option("--inject-fault", is_flag=True, help="Corrupt row 2-3-2 before comparing")
@common_options
@handle_errors
def verify_tables(inject_fault: bool, as_json: bool, workers: Optional[int], out: Optional[str]):
    """Rebuild the radical classification tables and diff them against the published ones."""
    _configure(as_json, workers)
    response = experiment_service.verify_tables(inject_fault=inject_fault)
    lines = [response.message]
    lines += [f"  {m.table} row {m.row}: expected {m.expected}, derived {m.derived}" for m in response.mismatches]
    _emit("verify-tables", response, as_json, out, {"inject_fault": inject_fault}, "\n".join(lines))
    _fail_unless(response)


@cli.command("brute-count")
@click.argument("graph_file")
@click.option("--chain", default=None, help="Comma-separated cell ids of a chain through the origin cell")
@common_options
@handle_errors
def brute_count(graph_file: str, chain: Optional[str], as_json: bool, workers: Optional[int], out: Optional[str]):
    """Count recurrent configurations by burning, optionally against the chain decomposition."""
    _configure(as_json, workers)
    graph = result_store.load_graph(graph_file)
    chain_cells = None if chain is None else _parse_cells(chain)
    response = experiment_service.brute_count(graph, chain_cells)
    text = f"stable {response.stable}, recurrent {response.recurrent}"
    if response.decomposition is not None:
        text += f", decomposition {response.decomposition}"
    _emit("brute-count", response, as_json, out, {"graph": graph_file, "chain": chain_cells}, text)
    _fail_unless(response)


@cli.command("radical-census")
@click.option("--method", type=click.Choice(["recursive", "bruteforce"]), default="recursive")
@click.option("--max-cells", type=int, default=3, help="Largest subtree swept by the bruteforce method")
@click.option("--depth", type=int, default=None, help="Deepest balanced subtree for the recursive method")
@common_options
@handle_errors
def radical_census(method: str, max_cells: int, depth: Optional[int], as_json: bool,
                   workers: Optional[int], out: Optional[str]):
    """Strong, weak, stopper and strong-stopper counts per rooted subtree, as CSV."""
    _configure(as_json, workers)
    response = experiment_service.radical_census(method=method, max_cells=max_cells, depth=depth)
    buffer = io.StringIO()
    fields = ["shape", "cells", "n_strong", "n_weak", "n_stopper", "n_strong_stopper", "x",
              "strong_stopper_fraction"]
    writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in response.rows:
        writer.writerow(row.model_dump())
    _emit("radical-census", response, as_json, out,
          {"method": method, "max_cells": max_cells, "depth": depth}, buffer.getvalue())
    _fail_unless(response)


@cli.command("fill-check")
@click.argument("graph_file")
@click.option("--cells", required=True, help="Comma-separated cell ids of the cluster")
@click.option("--theorem", type=click.Choice(["auto", "rooted", "first-wave"]), default="auto")
@common_options
@handle_errors
def fill_check(graph_file: str, cells: str, theorem: str, as_json: bool, workers: Optional[int],
               out: Optional[str]):
    """Compare filling-rule configurations of a cluster with brute force."""
    _configure(as_json, workers)
    graph = result_store.load_graph(graph_file)
    response = experiment_service.fill_check(graph, _parse_cells(cells), theorem)
    verdict = "pass" if response.success else "FAIL"
    _emit("fill-check", response, as_json, out,
          {"graph": graph_file, "cells": response.cluster_cells, "theorem": response.theorem},
          f"{verdict}: {response.message}")
    _fail_unless(response)


@cli.command("first-wave-dist")
@click.argument("graph_file")
@click.option("--mode", type=click.Choice(["exhaustive", "sampled"]), default="exhaustive")
@click.option("--seed", type=int, default=None)
@click.option("--budget", "samples", type=int, default=None, help="Recurrent samples to draw in sampled mode")
@common_options
@handle_errors
def first_wave_dist(graph_file: str, mode: str, seed: Optional[int], samples: Optional[int], as_json: bool,
                    workers: Optional[int], out: Optional[str]):
    """Histogram of first-wave cell mass over recurrent configurations."""
    _configure(as_json, workers)
    graph = result_store.load_graph(graph_file)
    response = experiment_service.first_wave_dist(graph, mode=mode, seed=seed, samples=samples)
    text = "\n".join(f"{mass}\t{count}" for mass, count in response.histogram.items())
    _emit("first-wave-dist", response, as_json, out,
          {"graph": graph_file, "mode": mode, "samples": samples}, text, seed=response.seed)


@cli.command("avalanche")
@click.argument("graph_file")
@click.argument("config_file")
@click.option("--vertex", default=None, help="Vertex <cell>:<local> receiving the grain; defaults to the origin")
@click.option("--full-sequence", is_flag=True, help="Include every toppling in the report")
@common_options
@handle_errors
def avalanche(graph_file: str, config_file: str, vertex: Optional[str], full_sequence: bool, as_json: bool,
              workers: Optional[int], out: Optional[str]):
    """Add one grain to a stable configuration and report the avalanche."""
    _configure(as_json, workers)
    graph = result_store.load_graph(graph_file)
    config = result_store.load_configuration(graph, config_file)
    target = None if vertex is None else graph.parse_label(vertex)
    response = experiment_service.avalanche(graph, config, target, full_sequence=full_sequence)
    lines = [f"{response.topplings} topplings from {response.vertex}, "
             f"vertex mass {response.vertex_mass}, cell mass {response.cell_mass}"]
    if response.wave_count is not None:
        lines.append(f"{response.wave_count} waves, first-wave cells {response.first_wave_cells}")
    if response.sequence is not None:
        lines.append(" ".join(response.sequence))
    lines.append(response.final.model_dump_json())
    _emit("avalanche", response, as_json, out,
          {"graph": graph_file, "configuration": config_file, "vertex": response.vertex,
           "full_sequence": full_sequence}, "\n".join(lines))


@cli.command("witness")
@click.argument("graph_file")
@click.option("--budget", type=int, default=None, help="Configurations to examine")
@click.option("--seed", type=int, default=None)
@common_options
@handle_errors
def witness(graph_file: str, budget: Optional[int], seed: Optional[int], as_json: bool,
            workers: Optional[int], out: Optional[str]):
    """Search for a vertex that topples only after the first wave."""
    _configure(as_json, workers)
    graph = result_store.load_graph(graph_file)
    response = experiment_service.witness(graph, budget=budget, seed=seed)
    lines = [response.status]
    if response.vertex is not None:
        lines.append(f"late vertex {response.vertex}")
        lines.append(json.dumps(response.configuration, sort_keys=True))
        lines += [f"wave {k + 1}: {' '.join(wave)}" for k, wave in enumerate(response.waves)]
    _emit("witness", response, as_json, out, {"graph": graph_file, "budget": budget},
          "\n".join(lines), seed=response.seed)


@cli.command("series")
@click.option("--n-max", type=int, default=None)
@common_options
@handle_errors
def series_command(n_max: Optional[int], as_json: bool, workers: Optional[int], out: Optional[str]):
    """Coefficients b_n of g with c_n = b_n / 20^n and c_n n^(3/2), as CSV."""
    _configure(as_json, workers)
    rows = experiment_service.series_rows(n_max)
    if as_json:
        content = json.dumps([row.model_dump() for row in rows], indent=2)
    else:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["n", "b_n", "c_n", "c_n_n32"])
        for row in rows:
            writer.writerow([row.n, row.b_n or "", repr(row.c_n), repr(row.scaled)])
        content = buffer.getvalue()
    result_store.write("series", content, out=out, parameters={"n_max": n_max or settings.SERIES_LENGTH})


@cli.command("exponent-fit")
@click.option("--n-min", type=int, default=None)
@click.option("--n-max", type=int, default=None)
@common_options
@handle_errors
def exponent_fit(n_min: Optional[int], n_max: Optional[int], as_json: bool, workers: Optional[int],
                 out: Optional[str]):
    """Least-squares slope of log(b_n / 20^n) against log n."""
    _configure(as_json, workers)
    response = experiment_service.exponent_fit(n_min, n_max)
    _emit("exponent-fit", response, as_json, out, {"window": response.window},
          f"slope {response.slope:.6f} +/- {response.stderr:.2e} over {response.window}")
    _fail_unless(response)


@cli.command("phi")
@click.option("--n-max", type=int, default=None)
@common_options
@handle_errors
def phi(n_max: Optional[int], as_json: bool, workers: Optional[int], out: Optional[str]):
    """Exact liberty-rule factors phi_n."""
    _configure(as_json, workers)
    response = experiment_service.phi(n_max)
    text = "\n".join(f"{row.n}\t{row.phi}\t{row.value:.6f}" for row in response.rows)
    _emit("phi", response, as_json, out, {"n_max": n_max}, text)
    _fail_unless(response)


@cli.command("stopper-fractions")
@click.option("--depth", type=int, default=None)
@common_options
@handle_errors
def stopper_fractions(depth: Optional[int], as_json: bool, workers: Optional[int], out: Optional[str]):
    """Exact stopper shares on balanced subtrees B_0..B_depth."""
    _configure(as_json, workers)
    response = experiment_service.stopper_fractions(depth)
    text = "\n".join(f"{row.depth}\t{row.x}\t{row.strong_stopper_fraction}\t{row.distance_to_limit:.3e}"
                     for row in response.rows)
    _emit("stopper-fractions", response, as_json, out, {"depth": depth}, text)


@cli.command("pcf-bounds")
@click.option("--n", "n_values", type=int, multiple=True, help="Repeat for several values")
@common_options
@handle_errors
def pcf_bounds(n_values: List[int], as_json: bool, workers: Optional[int], out: Optional[str]):
    """Lower and upper bounds on the share of first waves toppling exactly n cells."""
    _configure(as_json, workers)
    response = experiment_service.pcf_bounds(n_values or (10, 100, 1000, 10000))
    text = "\n".join(f"{row.n}\t{row.lower:.6e}\t{row.upper:.6e}\t{row.phi}" for row in response.rows)
    _emit("pcf-bounds", response, as_json, out, {"n": [row.n for row in response.rows]}, text)


@cli.command("build-graph")
@click.option("--radius", type=int, default=None)
@common_options
@handle_errors
def build_graph(radius: Optional[int], as_json: bool, workers: Optional[int], out: Optional[str]):
    """Write the graph document of a ball about the origin; the output is JSON either way."""
    document = experiment_service.build_graph(radius)
    result_store.write("build-graph", document.model_dump_json(indent=2), out=out,
                       parameters={"radius": radius if radius is not None else settings.BALL_RADIUS})


def main(argv: Optional[List[str]] = None) -> None:
    """Entry point; usage errors count as input errors."""
    try:
        code = cli.main(args=argv, standalone_mode=False)
    except click.UsageError as e:
        e.show()
        sys.exit(InputError.exit_code)
    except click.Abort:
        sys.exit(1)
    sys.exit(code if isinstance(code, int) else 0)
