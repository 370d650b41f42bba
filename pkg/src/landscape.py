"""Risk-landscape tables, run manifests and their CSV / JSON files."""

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
from pydantic import BaseModel, Field

from .config import ExperimentConfig, Method
from .errors import ConfigError

CSV_COLUMNS = [
    "delta",
    "epsilon",
    "A_mean",
    "A_q999",
    "n_conditioned",
    "n_total",
    "n_rejected",
    "status",
]
FLOAT_FORMAT = "%.17g"


class CellStatus(str, Enum):
    OK = "ok"
    NOT_ENOUGH_EVENTS = "not_enough_events"
    INFEASIBLE_TARGETS = "infeasible_targets"
    NETWORK_REJECTED = "network_rejected"
    NON_CONVERGENCE = "non_convergence"


@dataclass
class LandscapeRow:
    delta: float
    epsilon: float
    a_mean: float
    a_q999: float
    n_conditioned: int = 0
    n_total: int = 0
    n_rejected: int = 0
    status: CellStatus = CellStatus.OK
    # event probabilities (p0, p1, p2, p_c) when known
    probabilities: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def failed(
        cls, delta: float, epsilon: float, status: CellStatus, **counts
    ) -> "LandscapeRow":
        return cls(delta, epsilon, math.nan, math.nan, status=status, **counts)


@dataclass
class LandscapeTable:
    rows: List[LandscapeRow]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                [
                    row.delta,
                    row.epsilon,
                    row.a_mean,
                    row.a_q999,
                    row.n_conditioned,
                    row.n_total,
                    row.n_rejected,
                    CellStatus(row.status).value,
                ]
                for row in self.rows
            ],
            columns=CSV_COLUMNS,
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "LandscapeTable":
        missing = [c for c in CSV_COLUMNS if c not in frame.columns]
        if missing:
            raise ConfigError(f"landscape table lacks columns: {', '.join(missing)}")
        rows = [
            LandscapeRow(
                delta=float(r.delta),
                epsilon=float(r.epsilon),
                a_mean=float(r.A_mean),
                a_q999=float(r.A_q999),
                n_conditioned=int(r.n_conditioned),
                n_total=int(r.n_total),
                n_rejected=int(r.n_rejected),
                status=CellStatus(r.status),
            )
            for r in frame.itertuples(index=False)
        ]
        return cls(rows=rows)

    def pivot(self, column: str) -> pd.DataFrame:
        """epsilon x delta matrix of one statistic, NaN for missing cells.

        Raises:
            ConfigError: If a (delta, epsilon) cell appears more than once
        """
        frame = self.to_frame()
        repeated = frame[frame.duplicated(["delta", "epsilon"])]
        if not repeated.empty:
            cells = ", ".join(
                f"({r.delta:g}, {r.epsilon:g})" for r in repeated.itertuples()
            )
            raise ConfigError(f"landscape table repeats cells: {cells}")
        return frame.pivot(index="epsilon", columns="delta", values=column)

    def best(self, column: str = "A_mean") -> Optional[LandscapeRow]:
        frame = self.to_frame()
        if frame[column].isna().all():
            return None
        return self.rows[int(frame[column].idxmax())]


class RunManifest(BaseModel):
    """Everything needed to replay a landscape run bit for bit."""
    config: ExperimentConfig
    method: Method
    master_seed: int
    version: str
    duration_seconds: float = 0.0
    shock: Dict[str, Any] = Field(default_factory=dict)
    rejections: Dict[str, int] = Field(default_factory=dict)
    statuses: Dict[str, str] = Field(default_factory=dict)


def write_csv(table: LandscapeTable, path: Union[str, Path]) -> None:
    table.to_frame().to_csv(
        path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )


def read_csv(path: Union[str, Path]) -> LandscapeTable:
    """Read a landscape CSV.

    Raises:
        ConfigError: If the file is not a landscape table
    """
    try:
        frame = pd.read_csv(
            path, float_precision="round_trip", keep_default_na=False, na_values=[""]
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"cannot read landscape table {path}: {e}") from e
    try:
        return LandscapeTable.from_frame(frame)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"malformed landscape table {path}: {e}") from e


def _json_number(value: float) -> Optional[float]:
    return None if math.isnan(value) else value


def table_to_dict(
    table: LandscapeTable, manifest: Optional[RunManifest] = None
) -> Dict[str, Any]:
    """JSON-ready form of a table; NaN statistics become None."""
    rows = []
    for row in table.rows:
        entry = asdict(row)
        entry["status"] = CellStatus(row.status).value
        entry["a_mean"] = _json_number(row.a_mean)
        entry["a_q999"] = _json_number(row.a_q999)
        rows.append(entry)
    return {
        "metadata": table.metadata,
        "manifest": None if manifest is None else manifest.model_dump(mode="json"),
        "rows": rows,
    }


def table_to_json(table: LandscapeTable, manifest: Optional[RunManifest] = None) -> str:
    return json.dumps(table_to_dict(table, manifest), indent=2, sort_keys=True)


def write_json(
    table: LandscapeTable,
    path: Union[str, Path],
    manifest: Optional[RunManifest] = None,
) -> None:
    Path(path).write_text(table_to_json(table, manifest) + "\n")


def read_json(path: Union[str, Path]) -> LandscapeTable:
    try:
        payload = json.loads(Path(path).read_text())
        rows = [
            LandscapeRow(
                delta=r["delta"],
                epsilon=r["epsilon"],
                a_mean=math.nan if r["a_mean"] is None else r["a_mean"],
                a_q999=math.nan if r["a_q999"] is None else r["a_q999"],
                n_conditioned=r["n_conditioned"],
                n_total=r["n_total"],
                n_rejected=r["n_rejected"],
                status=CellStatus(r["status"]),
                probabilities=r.get("probabilities", {}),
            )
            for r in payload["rows"]
        ]
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"malformed landscape table {path}: {e}") from e
    return LandscapeTable(rows=rows, metadata=payload.get("metadata", {}))


def read_table(path: Union[str, Path]) -> LandscapeTable:
    if Path(path).suffix == ".json":
        return read_json(path)
    return read_csv(path)


def write_manifest(manifest: RunManifest, path: Union[str, Path]) -> None:
    Path(path).write_text(manifest.model_dump_json(indent=2) + "\n")


def read_manifest(path: Union[str, Path]) -> RunManifest:
    try:
        return RunManifest.model_validate_json(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError(f"invalid run manifest {path}: {e}") from e
