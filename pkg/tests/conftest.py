import numpy as np
import pytest

from gkmm import InfeasibleProblem, KernelConfig, PartitionedData, assemble

ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_partitions(rng, d, sizes, spread=1.0, weights=None):
    blocks = [rng.normal(rng.normal(0, spread, d), 1.0, (n, d)) for n in sizes]
    if weights == "random":
        w = rng.dirichlet(np.ones(len(sizes)))
        w[-1] = 1.0 - w[:-1].sum()
        weights = w
    return PartitionedData.from_blocks(blocks, weights)


def random_kernel_problem(rng, b_max=None, B=1000.0):
    """A feasible random instance: d <= 3, at most 3 blocks a side, blocks of <= 40 samples.

    ``b_max`` caps the number of test samples (the problem dimension).
    Infeasible draws (mean constraint out of reach) are redrawn.
    """
    while True:
        d = int(rng.integers(1, 4))
        train_sizes = rng.integers(2, 41, int(rng.integers(1, 4)))
        if b_max is None:
            test_sizes = rng.integers(1, 41, int(rng.integers(1, 4)))
        else:
            total = int(rng.integers(1, b_max + 1))
            cuts = np.sort(rng.choice(np.arange(1, total), size=min(int(rng.integers(0, 3)), total - 1),
                                      replace=False)) if total > 1 else []
            test_sizes = np.diff(np.concatenate([[0], cuts, [total]])).astype(int)
        train = random_partitions(rng, d, train_sizes, weights="random")
        test = random_partitions(rng, d, test_sizes, weights="random")
        kernel = KernelConfig("rbf", float(rng.uniform(0.2, 2.0)))
        try:
            return assemble(train, test, kernel, B=B)
        except InfeasibleProblem:
            continue


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
