import json
import math

import pytest

from src.config import Method
from src.errors import ConfigError
from src.landscape import (
    CSV_COLUMNS,
    CellStatus,
    LandscapeRow,
    LandscapeTable,
    RunManifest,
    read_csv,
    read_json,
    read_manifest,
    read_table,
    table_to_dict,
    write_csv,
    write_json,
    write_manifest,
)


@pytest.fixture
def table() -> LandscapeTable:
    rows = [
        LandscapeRow(0.0, 0.0, 1.0, 1.0, 120, 1000, 0),
        LandscapeRow(0.0, 0.5, 1.0 / 3.0 + 1.0, 2.0, 400, 1000, 2),
        LandscapeRow.failed(0.5, 0.0, CellStatus.NETWORK_REJECTED, n_rejected=100),
        LandscapeRow(
            0.5, 0.5, 1.25, math.nan, 7, 1000, 0, CellStatus.NOT_ENOUGH_EVENTS
        ),
    ]
    return LandscapeTable(rows=rows, metadata={"method": "mc", "master_seed": 5})


def test_should_round_trip_csv_with_missing_statistics(table, tmp_path):
    """When writing and reading a CSV, should keep full precision and NaN cells"""
    # Arrange
    path = tmp_path / "landscape.csv"

    # Act
    write_csv(table, path)
    loaded = read_csv(path)

    # Assert
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert loaded.rows[1].a_mean == table.rows[1].a_mean
    assert math.isnan(loaded.rows[2].a_mean)
    assert math.isnan(loaded.rows[3].a_q999)
    assert loaded.rows[2].status is CellStatus.NETWORK_REJECTED
    assert loaded.rows[2].n_rejected == 100


def test_should_write_nan_as_null_in_json(table, tmp_path):
    """When writing JSON, should replace NaN statistics with null"""
    # Arrange
    path = tmp_path / "landscape.json"

    # Act
    write_json(table, path)

    # Assert
    payload = json.loads(path.read_text())
    assert payload["rows"][2]["a_mean"] is None
    assert payload["rows"][3]["status"] == "not_enough_events"
    assert payload["metadata"]["master_seed"] == 5
    loaded = read_table(path)
    assert math.isnan(loaded.rows[3].a_q999)
    assert loaded.rows[1].a_mean == table.rows[1].a_mean


def test_should_embed_manifest_in_json(table, two_bank_config):
    """When a manifest is given, should serialize it next to the rows"""
    # Arrange
    manifest = RunManifest(
        config=two_bank_config, method=Method.MONTE_CARLO, master_seed=11, version="x"
    )

    # Act
    payload = table_to_dict(table, manifest)

    # Assert
    assert payload["manifest"]["method"] == "mc"
    assert payload["manifest"]["config"]["system"]["n_banks"] == 2


@pytest.mark.parametrize(
    "content", ["", "delta,epsilon\n0.1,0.2\n", "not,a,table\n1,2\n"]
)
def test_should_reject_malformed_csv(tmp_path, content):
    """When the file is not a landscape table, should raise ConfigError"""
    # Arrange
    path = tmp_path / "broken.csv"
    path.write_text(content)

    # Act / Assert
    with pytest.raises(ConfigError):
        read_csv(path)


def test_should_reject_malformed_json(tmp_path):
    """When the JSON lacks rows, should raise ConfigError"""
    # Arrange
    path = tmp_path / "broken.json"
    path.write_text('{"metadata": {}}')

    # Act / Assert
    with pytest.raises(ConfigError):
        read_json(path)


def test_should_round_trip_manifest(two_bank_config, tmp_path):
    """When writing a manifest, should restore the exact configuration"""
    # Arrange
    manifest = RunManifest(
        config=two_bank_config,
        method=Method.ANALYTIC,
        master_seed=11,
        version="0.1.0",
        statuses={"ok": 6},
    )
    path = tmp_path / "run.manifest.json"

    # Act
    write_manifest(manifest, path)
    loaded = read_manifest(path)

    # Assert
    assert loaded == manifest
    assert loaded.config.shock_distribution() == two_bank_config.shock_distribution()


def test_should_reject_invalid_manifest(tmp_path):
    """When the manifest is not valid, should raise ConfigError"""
    # Arrange
    path = tmp_path / "bad.manifest.json"
    path.write_text('{"method": "mc"}')

    # Act / Assert
    with pytest.raises(ConfigError):
        read_manifest(path)


def test_should_pivot_statistic_into_grid(table):
    """When pivoting, should index epsilon by rows and delta by columns"""
    # Act
    grid = table.pivot("A_mean")

    # Assert
    assert list(grid.index) == [0.0, 0.5]
    assert list(grid.columns) == [0.0, 0.5]
    assert grid.loc[0.5, 0.5] == 1.25
    assert math.isnan(grid.loc[0.0, 0.5])


def test_should_find_riskiest_cell(table):
    """When asked for the best cell, should return the largest A_mean"""
    # Act
    best = table.best()

    # Assert
    assert best is table.rows[1]
    assert LandscapeTable(rows=[table.rows[2]]).best() is None
