import numpy as np
import pytest
from hypothesis import settings

import lgsqe

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in item.nodeid:
        _ACCEPTANCE_RESULTS.append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{name}: {status}")


@pytest.fixture(scope="session")
def small_images():
    """A quick structured 16x16 grayscale set shared by module tests."""
    return lgsqe.stroke_images(80, side=16, seed=7)


@pytest.fixture(scope="session")
def small_pipeline(small_images):
    """A tiny fitted pipeline: 80 real vs 80 noise-degraded images."""
    generated = lgsqe.gaussian_degrade(lgsqe.stroke_images(80, side=16, seed=8), 0.25, seed=9)
    config = lgsqe.RunConfig(
        patch_size=3,
        stride=2,
        top_k=30,
        gbdt=lgsqe.GbdtParams(n_rounds=15, max_depth=2, min_samples_leaf=2),
    )
    model, _ = lgsqe.fit_pipeline(small_images, generated, config)
    return model, small_images, generated


def random_image_set(count, side=8, channels=1, seed=0, provenance="real"):
    rng = np.random.default_rng(seed)
    pixels = rng.random((count, side, side, channels), dtype=np.float32)
    return lgsqe.ImageSet(pixels, provenance)
