import numpy as np
import pytest

from wcf_forge import ellipsoid as el
from wcf_forge.assignments import lagrange_weights, monomial, split_h_g
from wcf_forge.errors import InputError, ScheduleError
from wcf_forge.instances import (
    ExtendedMatrixInstance,
    LimitSymMatrix,
    _wiggle_step,
    build_instance,
    component_gap,
    contact_gap,
    flip,
    make_instance,
    normal_init,
    terminal_normals,
    weingarten_iterate,
    wiggle_iterate_v,
    wiggle_normal_init_v,
    wiggle_normal_init_w,
    wiggle_room,
)

from oracles import random_psd

r2, r3, r6 = np.sqrt(0.5), np.sqrt(3), np.sqrt(1 / 6)


def worked():
    return build_instance(*split_h_g(lagrange_weights([0, 1, 2, 3])))


def merge():
    return build_instance(*split_h_g(lagrange_weights([0, 1, 2])), shape="pad_h_infinite")


def test_build_worked_instance():
    X = worked()
    np.testing.assert_allclose(X.H.finite, np.diag([1, 3]))
    np.testing.assert_allclose(X.G.finite, np.diag([0, 2]))
    np.testing.assert_allclose(X.w, [r2, r6])
    np.testing.assert_allclose(X.v, [r6, r2])
    assert X.rank == 2 and not X.has_limit_dirs and not X.completely_specified


def test_build_merge_instance():
    X = merge()
    np.testing.assert_allclose(X.H.finite, np.diag([1, 0]))
    np.testing.assert_allclose(X.H.D[:, 0], [0, 1])
    np.testing.assert_allclose(X.w, [1, 0])
    np.testing.assert_allclose(X.G.finite, np.diag([0, 2]))
    np.testing.assert_allclose(X.v, [r2, r2])
    # the inverse swaps the divergent slot into a vanishing one
    np.testing.assert_allclose(X.H_pinv.Z[:, 0], [0, 1])


def test_build_with_vector_power():
    h, g = split_h_g(lagrange_weights([1, 2, 3, 4]))
    X = build_instance(h, g, b=1)
    np.testing.assert_allclose(X.w, np.sqrt(h.p) * h.x)


def test_build_shape_mismatch():
    h, g = split_h_g(lagrange_weights([0, 1, 2]))
    with pytest.raises(InputError):
        build_instance(h, g, shape="balanced")
    with pytest.raises(InputError):
        build_instance(h, g, shape="nonsense")


def test_normal_init():
    X = normal_init(worked())
    np.testing.assert_allclose(X.u_h, [0.5, r3 / 2])
    np.testing.assert_allclose(X.u_g, [0, 1], atol=1e-15)
    Y = normal_init(X)
    np.testing.assert_allclose(Y.u_h, X.u_h)
    I = LimitSymMatrix.from_parts(np.eye(2))
    u = np.array([0.6, 0.8])
    Z = normal_init(make_instance(I, I, u, u))
    np.testing.assert_allclose(Z.u_h, u)
    np.testing.assert_allclose(Z.u_g, u)


def test_gaps():
    assert contact_gap(worked()) == pytest.approx(0, abs=1e-15)
    assert component_gap(worked()) == pytest.approx(0, abs=1e-15)
    assert contact_gap(merge()) == pytest.approx(0, abs=1e-15)
    assert component_gap(merge()) == pytest.approx(-1)


def test_weingarten_iterate_step():
    X = weingarten_iterate(worked())
    assert X.rank == 1
    np.testing.assert_allclose(X.w, [r3 / 2, -0.5])
    np.testing.assert_allclose(X.v, [1, 0], atol=1e-15)
    ref = r2 * np.array([[9 / 8, -3 * r3 / 8], [-3 * r3 / 8, 3 / 8]])
    np.testing.assert_allclose(X.H.finite, ref, atol=1e-14)
    np.testing.assert_allclose(X.H.finite @ normal_init(worked()).u_h, 0, atol=1e-14)
    assert np.linalg.norm(X.w) == pytest.approx(1) and np.linalg.norm(X.v) == pytest.approx(1)
    # positive inverse stays consistent on the new subspace
    P = X.frame_h @ X.frame_h.T
    np.testing.assert_allclose(X.H.finite @ X.H_pinv.finite, P, atol=1e-12)
    Z = weingarten_iterate(X)
    assert Z.rank == 0


def test_wiggle_merge():
    X = wiggle_normal_init_w(merge())
    np.testing.assert_allclose(X.u_h, [r2, r2])
    np.testing.assert_allclose(X.u_g, [0, 1], atol=1e-15)
    uh, ug = terminal_normals(X)
    np.testing.assert_allclose(uh, [r2, -r2])
    np.testing.assert_allclose(ug, [1, 0], atol=1e-15)


def test_wiggle_requires_room():
    assert wiggle_room(worked()) is None
    with pytest.raises(ScheduleError):
        wiggle_normal_init_w(worked())
    with pytest.raises(ScheduleError):
        wiggle_normal_init_v(merge())
    with pytest.raises(ScheduleError):
        wiggle_iterate_v(merge())
    # w overlapping the divergent direction leaves no room
    X = merge()
    bad = ExtendedMatrixInstance(X.H, X.G, np.array([r2, r2]), X.v, X.H_pinv, X.G_pinv, X.frame_h, X.frame_g)
    assert wiggle_room(bad) is None


def test_flip():
    X = worked()
    F = flip(X)
    np.testing.assert_allclose(F.H.finite, np.diag([1, 1 / 3]))
    FF = flip(F)
    np.testing.assert_allclose(FF.H.finite, X.H.finite)
    np.testing.assert_allclose(FF.G.finite, X.G.finite)
    h, g = split_h_g(lagrange_weights([1, 2, 3, 4, 5], monomial(1)))
    Y = build_instance(h, g, shape="pad_g_zero")
    assert Y.G.Z.shape[1] == 1 and flip(Y).G.D.shape[1] == 1


def test_materialize_and_round_trip():
    X = merge()
    np.testing.assert_allclose(X.H.materialize(1e-3), np.diag([1, 1e3]))
    Y = ExtendedMatrixInstance.from_dict(X.to_dict())
    np.testing.assert_allclose(Y.H.D, X.H.D)
    np.testing.assert_allclose(Y.H_pinv.finite, X.H_pinv.finite)
    np.testing.assert_allclose(Y.w, X.w)


def test_infinite_contraction_guard():
    X = merge()
    with pytest.raises(ScheduleError):
        X.H.apply(np.array([0.0, 1.0]))
    assert X.H.quad(np.array([0.0, 1.0])) == np.inf


def test_wiggle_step_matches_finite_eps():
    """Limit form of the wiggle iteration against the eps formula at small eps."""
    rng = np.random.default_rng(7)
    d = 4
    t = np.zeros(d)
    t[-1] = 1.0
    Mf = np.zeros((d, d))
    Mf[:3, :3] = random_psd(rng, 3)
    M = LimitSymMatrix.from_parts(Mf, t)
    frame = np.eye(d)
    Mp = M.pinv(frame)
    x = np.r_[rng.standard_normal(3), 0.0]
    u = el.normal(Mf, x)
    theta = 0.7
    u_side = np.cos(theta) * u + np.sin(theta) * t
    M_new, Mp_new, x_new, frame_new = _wiggle_step(M, Mp, x, u_side, frame)
    eps = 1e-8
    Me = M.materialize(eps)
    y = np.linalg.solve(Me, u_side)
    We = el.weingarten(Me, y / np.linalg.norm(y))
    t_new = M_new.D[:, 0]
    assert abs(t_new @ u_side) < 1e-12
    assert t_new @ We @ t_new > 1e5
    P = frame_new @ frame_new.T - np.outer(t_new, t_new)
    np.testing.assert_allclose(P @ We @ P, M_new.finite, atol=1e-5)
    np.testing.assert_allclose(We @ u_side, 0, atol=1e-5 * np.abs(We).max())
    np.testing.assert_allclose(np.linalg.norm(x_new), 1)
    assert abs(x_new @ u_side) < 1e-12
