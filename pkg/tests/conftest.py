import numpy as np
import pytest

from paretopilot import design_space as ds


@pytest.fixture(scope="session")
def space() -> ds.ParameterSpace:
    return ds.default_space()


@pytest.fixture(scope="session")
def tiny_space() -> ds.ParameterSpace:
    """A 5-parameter space small enough for exhaustive checks."""
    return ds.ParameterSpace(params=tuple(
        ds.ParameterSpec(f"p{i}", 0.0, 1.0, 0.5) for i in range(5)))


@pytest.fixture(scope="session")
def functional_table_rows():
    """(condition, dispersion mean/std, leakage mean/std) for every measured
    row of the bundled initial-sampling dataset."""
    import csv
    from paretopilot import datasets
    rows = []
    with datasets.open_dataset(datasets.LHS_INITIAL) as f:
        for row in csv.DictReader(f):
            if row["dispersion_mean"] == "-":
                continue
            cond = [float(row[c]) for c in
                    ("radiant_energy_J_cm2", "pulse_count", "pulse_length_ms",
                     "micropulse_count", "duty_cycle_pct")]
            rows.append({
                "id": row["condition_id"],
                "condition": np.array(cond),
                "dispersion": (float(row["dispersion_mean"]),
                               float(row["dispersion_std"])),
                "leakage": (float(row["leakage_mean"]), float(row["leakage_std"])),
            })
    return rows
