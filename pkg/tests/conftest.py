import json
from pathlib import Path

import numpy as np
import pytest

from cpmp_cs.instance import ProblemInstance, build_distance_matrix

DATA = Path(__file__).parent / "data"


def load_tiny_records():
    return json.loads((DATA / "tiny_instances.json").read_text())["instances"]


def tiny_instance(record) -> ProblemInstance:
    return ProblemInstance.from_arrays(
        record["coords"], record["demands"], record["capacities"], record["p"], record["name"]
    )


def benchmark_like(seed: int, n: int = 50, p: int = 5, capacity: float = 120.0) -> ProblemInstance:
    """Random instance shaped like the 50-node, capacity-120 benchmark set."""
    rng = np.random.default_rng(seed)
    coords = rng.integers(1, 100, size=(n, 2)).astype(float)
    demands = rng.integers(1, 18, size=n).astype(float)
    return ProblemInstance.from_arrays(coords, demands, capacity, p, f"bench-like-{seed}")


@pytest.fixture(scope="session")
def tiny_records():
    return load_tiny_records()


@pytest.fixture(scope="session")
def bench_instance():
    inst = benchmark_like(0)
    return inst, build_distance_matrix(inst)


# --- acceptance verdict lines ----------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
