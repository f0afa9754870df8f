import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from g2kit.exterior import Form, affine_map, pullback

settings.register_profile(
    "repo",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def random_form(rng, dim, degree, density=0.6):
    import itertools

    terms = {}
    for idx in itertools.combinations(range(dim), degree):
        if rng.random() < density:
            terms[idx] = float(rng.standard_normal())
    return Form(dim, degree, terms)


def pushforward(form, T):
    """``T_* form``: the pullback along ``T^{-1}``."""
    return pullback(affine_map(np.linalg.inv(T)), form)


def random_gl(rng, n, cond_max=30.0):
    while True:
        T = rng.standard_normal((n, n)) + 2.0 * np.eye(n)
        if np.linalg.cond(T) < cond_max:
            return T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
