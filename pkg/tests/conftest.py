import numpy as np
import pytest

from linkenergy.curves import hopf_link, perturbed_hopf, projected_hopf_link


@pytest.fixture(scope="session")
def hopf():
    return hopf_link()


@pytest.fixture(scope="session")
def hopf_r3():
    return projected_hopf_link()


@pytest.fixture(scope="session")
def perturbed_s3():
    return [perturbed_hopf(seed, 0.1, chart="S3") for seed in (1, 2, 3)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_vectors(rng, count, dim=4):
    x = rng.normal(size=(count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        name, ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}  {'PASS' if ok else 'FAIL'}  "
                                    f"{name}: {detail}")
