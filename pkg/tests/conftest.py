import numpy as np
import pytest
from hypothesis import settings

from fermidq.grassmann import AlgebraSignature, substitute

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def quantizer_at(omega, ext, psi_names, pi_names):
    """Move the quantizer's phase-space point onto generators of ``ext``."""
    sig = omega.sig
    mp = {}
    for j in range(sig.n):
        mp[sig.names[sig.psi_index(j + 1)]] = ext.gen(psi_names[j])
        mp[sig.names[sig.pi_index(j + 1)]] = ext.gen(pi_names[j])
    return omega.map_entries(lambda e: substitute(e, mp, ext))


def sig_n(n, hbar=1.0, params=()):
    return AlgebraSignature(n, tuple(params), hbar)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
