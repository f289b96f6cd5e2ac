"""The numba fast path and the pure-numpy fallback compute the same thing.

Comparisons run over short horizons: the Lorenz-96 system is chaotic, so
round-off-level differences between summation orders grow exponentially
with integration time and any long-horizon comparison is meaningless.
"""

import importlib.util

import numpy as np
import pytest

from impsamp import _kernels

HAS_NUMBA = importlib.util.find_spec("numba") is not None

pytestmark = pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable; single-path build")


@pytest.fixture
def force_numpy(monkeypatch):
    monkeypatch.setenv("IMPSAMP_DISABLE_NUMBA", "1")


def test_env_flag_selects_fallback(monkeypatch):
    assert _kernels.use_numba()
    monkeypatch.setenv("IMPSAMP_DISABLE_NUMBA", "1")
    assert not _kernels.use_numba()
    monkeypatch.setenv("IMPSAMP_DISABLE_NUMBA", "0")
    assert _kernels.use_numba()


def test_l96_full_integrate_paths_agree(monkeypatch):
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal(18)
    y0 = 0.1 * rng.standard_normal(360)
    args = (x0, y0, 18, 20, 10.0, 0.5, -1.0, 1.0, 0.01, 200, 10)
    xs_nb, xf_nb, yf_nb, blow_nb = _kernels.l96_full_integrate(*args)
    monkeypatch.setenv("IMPSAMP_DISABLE_NUMBA", "1")
    xs_np, xf_np, yf_np, blow_np = _kernels.l96_full_integrate(*args)
    assert blow_nb == blow_np == -1
    np.testing.assert_allclose(xs_nb, xs_np, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(yf_nb, yf_np, rtol=1e-9, atol=1e-9)


def test_l96_reduced_integrate_paths_agree(monkeypatch):
    x0 = np.random.default_rng(1).standard_normal(18)
    xs_nb, _, _ = _kernels.l96_reduced_integrate(x0, 8.0, 0.01, 300, 10)
    monkeypatch.setenv("IMPSAMP_DISABLE_NUMBA", "1")
    xs_np, _, _ = _kernels.l96_reduced_integrate(x0, 8.0, 0.01, 300, 10)
    np.testing.assert_allclose(xs_nb, xs_np, rtol=1e-10, atol=1e-10)


def test_jacobi_paths_agree(monkeypatch):
    rng = np.random.default_rng(2)
    a = rng.standard_normal((24, 24))
    a = 0.5 * (a + a.T)
    norm = np.linalg.norm(a, "fro")
    A1, V1 = a.copy(), np.eye(24)
    off1, sweeps1 = _kernels.jacobi_sweeps(A1, V1, 1e-12 * norm, 100)
    monkeypatch.setenv("IMPSAMP_DISABLE_NUMBA", "1")
    A2, V2 = a.copy(), np.eye(24)
    off2, sweeps2 = _kernels.jacobi_sweeps(A2, V2, 1e-12 * norm, 100)
    assert sweeps1 == sweeps2
    np.testing.assert_allclose(np.diag(A1), np.diag(A2), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(V1, V2, atol=1e-12)


def test_systematic_indices_paths_agree(monkeypatch):
    rng = np.random.default_rng(3)
    w = rng.random(257)
    w /= w.sum()
    u0 = 0.37521
    idx_nb = _kernels.systematic_indices(w, u0)
    monkeypatch.setenv("IMPSAMP_DISABLE_NUMBA", "1")
    idx_np = _kernels.systematic_indices(w, u0)
    np.testing.assert_array_equal(idx_nb, idx_np)


def test_blowup_detection_both_paths(monkeypatch, force_numpy):
    x0 = 1e6 * np.random.default_rng(4).standard_normal(18)
    y0 = np.zeros(360)
    _, _, _, blow = _kernels.l96_full_integrate(
        x0, y0, 18, 20, 10.0, 0.5, -1.0, 1.0, 0.01, 50, 1
    )
    assert blow >= 0
