import math

import numpy as np
import pytest

from gravelet.graph import build_graph, laplacian
from gravelet.spectral import SpectrumInfo, extremal_eigenvalues
from gravelet.synthgen import make_barbell
from gravelet.wavelet import (
    admissible_scale,
    convergence_bounds_check,
    delta_a,
    dump_wavelets_csv,
    geometric_scales,
    heat_wavelets,
    offdiag_variance,
    select_scales,
)

from conftest import cycle, random_connected

K2 = build_graph([("a", "b")])


def _spec(l2, lN):
    return SpectrumInfo(l2, lN, "dense")


def test_k2_scale_range():
    r = select_scales(_spec(2.0, 2.0))
    assert r.s_min == pytest.approx(0.02564664719377529, rel=1e-12)
    assert r.s_max == pytest.approx(0.08125946474888747, rel=1e-12)
    assert r.scales == (r.s_min, r.s_max)


def test_equal_eta_gamma_collapses():
    r = select_scales(_spec(1.0, 3.0), eta=0.9, gamma=0.9)
    assert r.s_min == r.s_max


def test_gamma_near_one_sends_smin_to_zero():
    assert select_scales(_spec(1.0, 3.0), gamma=1 - 1e-12).s_min < 1e-11


def test_scale_range_validation():
    with pytest.raises(ValueError):
        select_scales(_spec(0.0, 3.0))
    with pytest.raises(ValueError):
        select_scales(_spec(1.0, 3.0), eta=0.96, gamma=0.95)


def test_geometric_scales():
    s = geometric_scales(0.1, 1.0, 5)
    assert s[0] == 0.1 and s[-1] == 1.0
    assert np.allclose(np.diff(np.log(s)), math.log(10) / 4)
    assert geometric_scales(0.1, 0.4, 1) == pytest.approx((0.2,))


@pytest.mark.parametrize("mode", ["dense", "chebyshev"])
def test_identity_at_zero(mode):
    wm = heat_wavelets(random_connected(1), 0.0, mode=mode)
    assert np.abs(wm.toarray() - np.eye(wm.n)).max() <= 1e-10


@pytest.mark.parametrize("mode", ["dense", "chebyshev"])
def test_k2_at_one(mode):
    e = math.exp(-2)
    expect = np.array([[(1 + e) / 2, (1 - e) / 2], [(1 - e) / 2, (1 + e) / 2]])
    assert np.abs(heat_wavelets(K2, 1.0, mode=mode).toarray() - expect).max() <= 1e-8


def test_mass_conservation_both_paths():
    g = random_connected(12, 150)
    for mode in ("dense", "chebyshev"):
        wm = heat_wavelets(g, 0.8, mode=mode)
        assert np.abs(wm.toarray().sum(axis=0) - 1).max() <= 1e-8
        assert wm.method == mode


def _orbits(b):
    return [np.flatnonzero(b.roles == r) for r in range(len(b.role_names))]


def test_barbell_orbits_share_coefficient_multisets():
    b = make_barbell()
    psi = heat_wavelets(b.graph, 0.5, mode="dense").toarray()
    for members in _orbits(b):
        ref = np.sort(psi[:, members[0]])
        for a in members[1:]:
            assert np.abs(np.sort(psi[:, a]) - ref).max() <= 1e-8


def test_delta_examples():
    g = random_connected(3)
    assert delta_a(heat_wavelets(g, 0.0, "dense"), 4) == pytest.approx((g.n - 1) / g.n)
    for s in (0.2, 1.0):
        assert delta_a(heat_wavelets(K2, s, "dense"), 0) == pytest.approx(math.exp(-2 * s) / 2)
    assert delta_a(heat_wavelets(g, 1e4, "dense"), 4) <= 1e-10


def test_delta_monotone_in_scale():
    g = random_connected(5)
    spec = extremal_eigenvalues(laplacian(g), "dense")
    diags = [heat_wavelets(g, s, "dense", spec=spec).diagonal() for s in np.linspace(0, 5, 20)]
    for a in range(g.n):
        vals = [delta_a(d, a) for d in diags]
        assert all(x >= y - 1e-14 for x, y in zip(vals, vals[1:]))


def test_offdiag_variance_examples():
    g = random_connected(3)
    assert offdiag_variance(heat_wavelets(g, 0.0, "dense"), 0) == pytest.approx(0.0, abs=1e-20)
    assert offdiag_variance(heat_wavelets(K2, 0.7, "dense"), 1) == 0.0


def _variance_rhs(g, a, s, spec):
    n = g.n
    d0 = delta_a(heat_wavelets(g, 0.0, "dense", spec=spec), a)
    ds = delta_a(heat_wavelets(g, s, "dense", spec=spec), a)
    d2s = delta_a(heat_wavelets(g, 2 * s, "dense", spec=spec), a)
    return n / (n - 1) ** 2 * (d0 * d2s - ds ** 2)


def test_offdiag_variance_identity():
    for seed in range(5):
        g = random_connected(seed)
        spec = extremal_eigenvalues(laplacian(g), "dense")
        for s in select_scales(spec).scales:
            wm = heat_wavelets(g, s, "dense", spec=spec)
            for a in range(0, g.n, 7):
                assert abs(offdiag_variance(wm, a) - _variance_rhs(g, a, s, spec)) <= 1e-10


def test_convergence_bounds_examples():
    g = random_connected(2)
    lo, val, hi = convergence_bounds_check(g, 0, 0)
    assert lo == val == hi == pytest.approx((g.n - 1) / g.n)
    e = math.exp(-2) / 2
    assert convergence_bounds_check(K2, 0, 1) == pytest.approx((e, e, e))
    c8 = cycle(8)
    for a in range(8):
        convergence_bounds_check(c8, a, 1)


def test_convergence_bounds_random_graphs():
    for seed in range(5):
        g = random_connected(seed)
        spec = extremal_eigenvalues(laplacian(g), "dense")
        for s in range(11):
            for a in range(0, g.n, 5):
                convergence_bounds_check(g, a, s, spec)


def test_convergence_bounds_rejects_fractional_scale():
    with pytest.raises(ValueError):
        convergence_bounds_check(K2, 0, 0.5)


def test_admissible_scale():
    # ((K+1)! eps)^(1/(K+1)) / lambda2
    expect = (math.factorial(31) * 1e-6) ** (1 / 31) / 0.5
    assert admissible_scale(0.5, 30, 1e-6) == pytest.approx(expect, rel=1e-12)


def test_dump_csv(tmp_path):
    wm = heat_wavelets(K2, 1.0, "chebyshev")
    out = tmp_path / "w.csv"
    dump_wavelets_csv(wm, out, ["a", "b"])
    lines = out.read_text().splitlines()
    assert lines[0] == "node,m,coefficient"
    assert len(lines) == 5
