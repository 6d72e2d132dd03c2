from pydantic import BaseModel
from typing import Optional, List, Dict, Any

from cactuspile.documents import ConfigurationDocument


class TableRowDiff(BaseModel):
    table: str
    row: str
    expected: Any
    derived: Any


class VerifyTablesResponse(BaseModel):
    success: bool
    message: str
    rows_matched: int
    rows_total: int
    weak_aggregate: List[int]
    strong_aggregate: List[int]
    mismatches: List[TableRowDiff] = []
    error: Optional[str] = None


class BruteCountResponse(BaseModel):
    success: bool
    message: str
    cells: int
    stable: int
    recurrent: int
    decomposition: Optional[int] = None
    chain_cells: Optional[List[int]] = None
    bounds: Optional[List[str]] = None  # exact rationals as strings
    error: Optional[str] = None


class CensusRow(BaseModel):
    shape: str
    cells: int
    n_strong: int
    n_weak: int
    n_stopper: int
    n_strong_stopper: int
    x: str
    strong_stopper_fraction: str


class RadicalCensusResponse(BaseModel):
    success: bool
    message: str
    method: str  # 'bruteforce' or 'recursive'
    rows: List[CensusRow] = []
    error: Optional[str] = None


class FillCheckResponse(BaseModel):
    success: bool
    message: str
    theorem: str  # 'rooted' or 'first-wave'
    cluster_cells: List[int]
    generated: int
    brute_force: int
    only_generated: int
    only_brute_force: int
    examples: List[Dict[str, int]] = []
    error: Optional[str] = None


class HistogramResponse(BaseModel):
    success: bool
    message: str
    mode: str  # 'exhaustive' or 'sampled'
    histogram: Dict[int, int]
    recurrent: int
    drawn: Optional[int] = None
    seed: Optional[int] = None
    error: Optional[str] = None


class WitnessResponse(BaseModel):
    success: bool
    message: str
    status: str  # 'found', 'none possible' or 'none found within budget'
    search_mode: str
    examined: int
    seed: Optional[int] = None
    configuration: Optional[Dict[str, int]] = None
    vertex: Optional[str] = None
    waves: List[List[str]] = []
    error: Optional[str] = None


class AvalancheResponse(BaseModel):
    success: bool
    message: str
    vertex: str
    order: str  # 'waves' at the origin, 'fifo' elsewhere
    topplings: int
    vertex_mass: int
    cell_mass: int
    wave_count: Optional[int] = None
    first_wave_cells: Optional[List[int]] = None
    final: ConfigurationDocument
    sequence: Optional[List[str]] = None  # only with --full-sequence
    wave_starts: Optional[List[int]] = None
    error: Optional[str] = None


class SeriesRow(BaseModel):
    n: int
    b_n: Optional[str] = None  # decimal string, only while exact coefficients are available
    c_n: float
    scaled: float  # c_n * n^(3/2)


class ExponentFitResponse(BaseModel):
    success: bool
    message: str
    slope: float
    intercept: float
    stderr: float
    window: List[int]
    polya_constant: float
    error: Optional[str] = None


class PhiRow(BaseModel):
    n: int
    phi: str
    value: float
    above_bound: bool


class PhiResponse(BaseModel):
    success: bool
    message: str
    rows: List[PhiRow] = []
    error: Optional[str] = None


class StopperRow(BaseModel):
    depth: int
    x: str
    stopper_fraction: str
    strong_stopper_fraction: str
    distance_to_limit: float


class StopperFractionsResponse(BaseModel):
    success: bool
    message: str
    rows: List[StopperRow] = []
    error: Optional[str] = None


class PcfRow(BaseModel):
    n: int
    lower: float
    upper: float
    phi: str
    phi_exact: bool
    lower_scaled: float  # lower * n^(3/2)
    upper_scaled: float


class PcfBoundsResponse(BaseModel):
    success: bool
    message: str
    rows: List[PcfRow] = []
    error: Optional[str] = None


class RunManifest(BaseModel):
    """Everything needed to rerun a command and check its output"""
    command: str
    parameters: Dict[str, Any] = {}
    seed: Optional[int] = None
    tool_version: str
    defaults_version: str
    defaults: Dict[str, Any] = {}
    output_file: str
    output_sha256: str
