import logging
from fractions import Fraction
from typing import Iterable, List, Optional

from cactuspile.analysis import engine, filling, radicals, recurrence, series, topology
from cactuspile.analysis.topology import CactusGraph, DecoratedRootedSubtree
from cactuspile.config import settings
from cactuspile.documents import GraphDocument, configuration_to_document, graph_to_document
from cactuspile.errors import InputError
from cactuspile.models import (
    AvalancheResponse,
    BruteCountResponse,
    CensusRow,
    ExponentFitResponse,
    FillCheckResponse,
    HistogramResponse,
    PcfBoundsResponse,
    PcfRow,
    PhiResponse,
    PhiRow,
    RadicalCensusResponse,
    SeriesRow,
    StopperFractionsResponse,
    StopperRow,
    TableRowDiff,
    VerifyTablesResponse,
    WitnessResponse,
)

logger = logging.getLogger(__name__)

FAULT_ROW = "2-3-2"


def _shape_label(shape: topology.Shape) -> str:
    if shape is None:
        return "."
    return f"({_shape_label(shape[0])},{_shape_label(shape[1])})"


class ExperimentService:
    """Runs the experiments behind each command and packages the results"""

    def __init__(self):
        self.workers = settings.WORKERS
        self.progress = False

    def verify_tables(self, inject_fault: bool = False) -> VerifyTablesResponse:
        """
        This endpoint:
        1. Derives the three classification tables from gadget experiments
        2. Optionally corrupts row 2-3-2 to exercise the failure path
        3. Diffs every row against the published tables
        """
        derived = radicals.derive_tables()
        if inject_fault:
            logger.warning(f"Injecting a fault into row {FAULT_ROW}")
            derived.table1[FAULT_ROW] = derived.table1[FAULT_ROW][:-1]
        mismatches = radicals.compare_tables(derived)
        bad_rows = {m.row for m in mismatches if m.table in ("table1", "table2")}
        rows_total = len(radicals.ROW_ORDER)
        rows_matched = sum(1 for row in radicals.ROW_ORDER if row not in bad_rows)
        weak, strong = derived.table3["weak"], derived.table3["strong"]
        aggregates_ok = not any(m.table == "table3" for m in mismatches)

        message = (f"{rows_matched}/{rows_total} rows match, aggregates "
                   f"({','.join(map(str, weak))})/({','.join(map(str, strong))})")
        if not aggregates_ok:
            message += " do not match"
        return VerifyTablesResponse(
            success=not mismatches,
            message=message,
            rows_matched=rows_matched,
            rows_total=rows_total,
            weak_aggregate=list(weak),
            strong_aggregate=list(strong),
            mismatches=[TableRowDiff(table=m.table, row=m.row, expected=m.expected, derived=m.derived)
                        for m in mismatches],
            error=None if not mismatches else f"mismatch in rows {sorted(bad_rows) or ['aggregates']}",
        )

    def brute_count(self, graph: CactusGraph, chain_cells: Optional[List[int]] = None) -> BruteCountResponse:
        """
        This endpoint:
        1. Counts recurrent configurations by burning every stable configuration
        2. If a chain through the origin cell is given, recounts through the radical censuses
        3. Reports the limiting bounds for a chain of that length
        """
        recurrent = recurrence.count_recurrent_bruteforce(graph, workers=self.workers, progress=self.progress)
        response = BruteCountResponse(
            success=True,
            message=f"{recurrent} of {3 ** graph.vertex_count} stable configurations are recurrent",
            cells=graph.cell_count,
            stable=3 ** graph.vertex_count,
            recurrent=recurrent,
        )
        if chain_cells is None:
            return response

        chain = topology.cluster_from_graph_cells(graph, chain_cells)
        decomposition = recurrence.count_recurrent_via_decomposition(graph, chain)
        lower, upper = recurrence.count_recurrent_bounds(chain.size, Fraction(0))
        response.decomposition = decomposition
        response.chain_cells = sorted(chain_cells)
        response.bounds = [str(lower), str(upper)]
        if decomposition != recurrent:
            response.success = False
            response.error = f"decomposition gives {decomposition}, brute force gives {recurrent}"
            response.message = "recurrent counts disagree"
            logger.error(response.error)
        else:
            response.message += "; chain decomposition agrees"
        return response

    def radical_census(self, method: str = "recursive", max_cells: int = 3,
                       depth: Optional[int] = None) -> RadicalCensusResponse:
        """
        This endpoint:
        1. Classifies every radical of each rooted subtree shape (bruteforce) or of B_0..B_depth (recursive)
        2. Checks that stoppers and strongly allowed radicals are equinumerous
        """
        rows = []
        if method == "bruteforce":
            shapes = [shape for k in range(1, max_cells + 1) for shape in topology.shapes_with_cells(k)]
            censuses = [(shape, radicals.census_bruteforce(topology.build_rooted_subtree(shape),
                                                           workers=self.workers, progress=self.progress))
                        for shape in shapes]
        elif method == "recursive":
            depth = settings.STOPPER_DEPTH if depth is None else depth
            censuses = [(topology.balanced_shape(d), radicals.balanced_census(d)) for d in range(depth + 1)]
        else:
            raise InputError(f"unknown census method {method!r}")

        for shape, census in censuses:
            rows.append(CensusRow(
                shape=_shape_label(shape),
                cells=topology.shape_cell_count(shape),
                n_strong=census.n_strong,
                n_weak=census.n_weak,
                n_stopper=census.n_stopper,
                n_strong_stopper=census.n_strong_stopper,
                x=str(census.x),
                strong_stopper_fraction=str(Fraction(census.n_strong_stopper, census.n_strong)),
            ))
        broken = [row.shape for row in rows if row.n_stopper != row.n_strong]
        return RadicalCensusResponse(
            success=not broken,
            message=f"{len(rows)} censuses; stoppers equal strongly allowed radicals in "
                    f"{len(rows) - len(broken)} of them",
            method=method,
            rows=rows,
            error=None if not broken else f"stopper identity fails on {broken}",
        )

    def fill_check(self, graph: CactusGraph, cells: Iterable[int], theorem: str = "auto") -> FillCheckResponse:
        """
        This endpoint:
        1. Generates configurations from the filling rules with real radicals
        2. Finds by brute force the recurrent configurations toppling exactly the cluster
        3. Compares the two sets
        """
        cells = sorted(set(cells))
        cluster = topology.cluster_from_graph_cells(graph, cells)
        if theorem == "auto":
            theorem = "first-wave" if graph.has_opposite else "rooted"
        if theorem == "rooted":
            subtree = DecoratedRootedSubtree(graph=graph, root_vertex=graph.origin_vertex,
                                             root_cell=graph.origin_cell)
            check = filling.verify_filling_theorem(subtree, cluster)
        elif theorem == "first-wave":
            check = filling.verify_first_wave_theorem(graph, cluster)
        else:
            raise InputError(f"unknown theorem {theorem!r}, expected 'rooted' or 'first-wave'")

        examples = [engine.Configuration(heights).to_mapping(graph) for heights in check.examples]
        return FillCheckResponse(
            success=check.passed,
            message=f"{check.generated} generated, {check.brute_force} found by brute force",
            theorem=theorem,
            cluster_cells=cells,
            generated=check.generated,
            brute_force=check.brute_force,
            only_generated=check.only_generated,
            only_brute_force=check.only_brute_force,
            examples=examples,
            error=None if check.passed else "filling rules and brute force disagree",
        )

    def first_wave_dist(self, graph: CactusGraph, mode: str = "exhaustive", seed: Optional[int] = None,
                        samples: Optional[int] = None) -> HistogramResponse:
        """
        This endpoint:
        1. Sweeps all recurrent configurations (exhaustive) or draws them by rejection (sampled)
        2. Histograms the number of cells toppling in the first wave from the origin
        """
        if mode == "exhaustive":
            histogram = filling.first_wave_histogram(graph, workers=self.workers, progress=self.progress)
            return HistogramResponse(
                success=True,
                message=f"{sum(histogram.values())} recurrent configurations",
                mode=mode,
                histogram=histogram,
                recurrent=sum(histogram.values()),
            )
        if mode == "sampled":
            sampled = filling.sample_first_wave_histogram(graph, samples=samples, seed=seed)
            return HistogramResponse(
                success=True,
                message=f"{sampled.accepted} recurrent configurations from {sampled.drawn} draws",
                mode=mode,
                histogram=sampled.histogram,
                recurrent=sampled.accepted,
                drawn=sampled.drawn,
                seed=sampled.seed,
            )
        raise InputError(f"unknown mode {mode!r}, expected 'exhaustive' or 'sampled'")

    def avalanche(self, graph: CactusGraph, config: engine.Configuration, vertex: Optional[int] = None,
                  full_sequence: bool = False) -> AvalancheResponse:
        """
        This endpoint:
        1. Adds one grain at the vertex (the origin when none is given)
        2. Relaxes wave by wave at the origin and in FIFO order elsewhere
        3. Returns the masses and final configuration, plus every toppling when asked
        """
        vertex = graph.origin_vertex if vertex is None else vertex
        at_origin = vertex == graph.origin_vertex
        if at_origin:
            report = engine.wave_decompose(graph, config)
        else:
            report = engine.add_and_relax(graph, config, vertex)
        log = report.log
        logger.info(f"Avalanche from {graph.label(vertex)}: {len(log.sequence)} topplings")

        response = AvalancheResponse(
            success=True,
            message=f"{len(log.sequence)} topplings over {report.cell_mass} cells",
            vertex=graph.label(vertex),
            order="waves" if at_origin else "fifo",
            topplings=len(log.sequence),
            vertex_mass=report.vertex_mass,
            cell_mass=report.cell_mass,
            final=configuration_to_document(graph, report.final),
        )
        if at_origin:
            response.wave_count = len(log.wave_marks)
            response.first_wave_cells = sorted(report.first_wave_cells)
        if full_sequence:
            response.sequence = [graph.label(v) for v in log.sequence]
            if at_origin:
                response.wave_starts = list(log.wave_marks)
        return response

    def witness(self, graph: CactusGraph, budget: Optional[int] = None,
                seed: Optional[int] = None) -> WitnessResponse:
        """
        This endpoint:
        1. Searches for a configuration where some vertex topples only after the first wave
        2. Returns it with its wave-by-wave toppling log
        """
        search = engine.search_multiwave_witness(graph, budget=budget, seed=seed, progress=self.progress)
        if search.mode == "impossible":
            status = "none possible"
        elif search.witness is None:
            status = "none found within budget"
        else:
            status = "found"
        response = WitnessResponse(
            success=True,
            message=f"{status} ({search.examined} configurations examined)",
            status=status,
            search_mode=search.mode,
            examined=search.examined,
            seed=search.seed,
        )
        if search.witness is not None:
            found = search.witness
            response.configuration = found.config.to_mapping(graph)
            response.vertex = graph.label(found.vertex)
            response.waves = [[graph.label(v) for v in wave] for wave in found.report.log.waves()]
        return response

    def series_rows(self, n_max: Optional[int] = None) -> List[SeriesRow]:
        """Exact b_n while affordable, scaled c_n = b_n / 20^n throughout"""
        n_max = settings.SERIES_LENGTH if n_max is None else n_max
        scaled = series.scaled_coeffs(n_max)
        exact_max = min(n_max, settings.EXACT_SERIES_MAX)
        exact = series.g_coeffs(exact_max)
        return [
            SeriesRow(
                n=n,
                b_n=str(exact[n]) if n <= exact_max else None,
                c_n=float(scaled[n]),
                scaled=float(scaled[n] * n ** series.CRITICAL_EXPONENT),
            )
            for n in range(1, n_max + 1)
        ]

    def exponent_fit(self, n_min: Optional[int] = None, n_max: Optional[int] = None) -> ExponentFitResponse:
        """
        This endpoint:
        1. Builds c_n = b_n / 20^n up to the end of the window
        2. Fits log c_n against log n
        """
        n_min = settings.FIT_WINDOW_MIN if n_min is None else n_min
        n_max = settings.FIT_WINDOW_MAX if n_max is None else n_max
        fit = series.fit_exponent(series.scaled_coeffs(n_max), n_min, n_max)
        within = abs(fit.slope + series.CRITICAL_EXPONENT) <= 0.01
        return ExponentFitResponse(
            success=within,
            message=f"slope {fit.slope:.4f} over [{n_min}, {n_max}]",
            slope=fit.slope,
            intercept=fit.intercept,
            stderr=fit.stderr,
            window=[n_min, n_max],
            polya_constant=series.polya_constant("g"),
            error=None if within else f"slope {fit.slope:.4f} is not within 0.01 of -1.5",
        )

    def phi(self, n_max: Optional[int] = None) -> PhiResponse:
        """Exact phi_n for n = 1..n_max against the 7/48 bound"""
        n_max = settings.PHI_MAX_CELLS if n_max is None else n_max
        rows = []
        for n in range(1, n_max + 1):
            value = filling.phi_n(n)
            rows.append(PhiRow(n=n, phi=str(value), value=float(value),
                               above_bound=filling.PHI_LOWER_BOUND < value <= 1))
        failed = [row.n for row in rows if not row.above_bound]
        return PhiResponse(
            success=not failed,
            message=f"phi_n for n = 1..{n_max}",
            rows=rows,
            error=None if not failed else f"phi_n outside (7/48, 1] for n in {failed}",
        )

    def stopper_fractions(self, depth: Optional[int] = None) -> StopperFractionsResponse:
        """Stopper and strong-stopper shares of B_0..B_depth"""
        depth = settings.STOPPER_DEPTH if depth is None else depth
        rows = []
        for d in range(depth + 1):
            stopper, strong_stopper = radicals.stopper_fractions(d)
            rows.append(StopperRow(
                depth=d,
                x=str(radicals.balanced_x(d)),
                stopper_fraction=str(stopper),
                strong_stopper_fraction=str(strong_stopper),
                distance_to_limit=float(abs(strong_stopper - filling.LIMIT_STRONG_STOPPER)),
            ))
        return StopperFractionsResponse(success=True, message=f"depths 0..{depth}", rows=rows)

    def pcf_bounds(self, n_values: Iterable[int]) -> PcfBoundsResponse:
        """Sandwich bounds on the first-wave cell-mass distribution"""
        n_values = sorted(set(n_values))
        if not n_values:
            raise InputError("no values of n given")
        scaled = series.scaled_coeffs(max(n_values))
        rows = []
        for n in n_values:
            bounds = series.pcf_bounds(n, scaled)
            rows.append(PcfRow(
                n=n,
                lower=bounds.lower,
                upper=bounds.upper,
                phi=str(bounds.phi),
                phi_exact=bounds.phi_exact,
                lower_scaled=bounds.lower * n ** series.CRITICAL_EXPONENT,
                upper_scaled=bounds.upper * n ** series.CRITICAL_EXPONENT,
            ))
        return PcfBoundsResponse(success=True, message=f"{len(rows)} values of n", rows=rows)

    def build_graph(self, radius: Optional[int] = None) -> GraphDocument:
        radius = settings.BALL_RADIUS if radius is None else radius
        return graph_to_document(topology.build_ball(radius))


# Global service instance
experiment_service = ExperimentService()
