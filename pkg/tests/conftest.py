import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from molcool.config import parse_config_text, resolve_config_path
from molcool.params import NormalizedParams, normalize
from molcool.steadystate import SteadyState

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

TWO_PI = 2.0 * math.pi


def preset(name, **overrides):
    cfg = parse_config_text(resolve_config_path(name).read_text(), name)
    for key, value in overrides.items():
        cfg.set(key, value)
    return cfg


def preset_np(name, **overrides):
    return normalize(preset(name, **overrides).params())


def random_point(rng):
    """Random normalized parameters plus an arbitrary (not solved) steady state.

    Transcription checks only need the formulas evaluated at the same inputs,
    so the state does not have to be a fixed point.
    """
    np_ = NormalizedParams(
        omega_m=TWO_PI * 1e7,
        delta_0f=float(rng.uniform(-2, 2)),
        delta_0p=None,
        delta_p=float(rng.uniform(-3, 3)),
        omega_p=float(rng.uniform(0, 5)),
        gamma_f=float(rng.uniform(0.01, 1)),
        gamma_m=float(rng.uniform(1e-6, 0.2)),
        gamma_p=float(rng.uniform(0, 1)),
        g=float(rng.uniform(-0.01, 0.01)),
        G0=float(rng.uniform(1e-6, 1e-3)),
        epsilon0=float(rng.uniform(0, 100)),
        n_bar=float(rng.uniform(0, 2)),
        n_m=float(rng.uniform(0, 500)),
        zeta0_s=float(rng.choice([-1.0, rng.uniform(-1, -0.1)])),
    )
    s = SteadyState(
        alpha_s=complex(rng.uniform(0, 50), 0.0),
        beta_s=complex(rng.uniform(-1, 1), rng.uniform(-1, 1)),
        zeta_s=complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)),
        zeta0_s=np_.zeta0_s,
        delta_f=float(rng.uniform(-2, 2)),
        delta_p_eff=float(rng.uniform(-3, 3)),
        residual=0.0,
        delta_0f=np_.delta_0f,
    )
    return np_, s


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


@pytest.fixture(autouse=True)
def _quiet_runtime_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[2])):
            terminalreporter.write_line(line)


@pytest.fixture
def report(request):
    """``report(n, title, passed, detail, seconds, limit)`` records one verdict line."""

    def _report(number, title, passed, detail, seconds, limit=None):
        in_time = limit is None or seconds <= limit
        verdict = "PASS" if (passed and in_time) else "FAIL"
        budget = f" (limit {limit:g} s)" if limit is not None else ""
        line = f"{verdict} criterion {number} [{title}] {detail}; {seconds:.1f} s{budget}"
        request.config._acceptance_lines.append(line)
        print(line)
        return passed and in_time

    return _report
