import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from report_helpers import write_csv, make_summary


@pytest.fixture
def sample_csvs(tmp_path):
    paths = []
    for name, errs in [
        ("irl", [1e-1, 1e-3, 1e-7]),
        ("sl", [1e-1, 5e-2, 2e-2]),
        ("adam", [1e-1, 9e-2, 8e-2]),
    ]:
        rows = [
            (i, -1.0 - i * 0.01, e, e * 627.509474, -e, 0.5, 9, 1.5 * i)
            for i, e in enumerate(errs)
        ]
        paths.append(write_csv(tmp_path / f"{name}.csv", rows))
    return paths


@pytest.fixture
def sample_jsons(tmp_path):
    paths = []
    for method, err in [("irl", 1.7e-4), ("sl", 4.1e-1), ("adam", 1.3e1)]:
        path = tmp_path / f"h2_{method}.json"
        path.write_text(json.dumps(make_summary(method, err_kcal=err)))
        paths.append(str(path))
    return paths
