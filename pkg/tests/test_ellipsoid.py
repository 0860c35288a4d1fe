import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wcf_forge.ellipsoid import (
    ellipsoid_map,
    normal,
    orth_component,
    positive_inverse,
    reverse_weingarten,
    sherman_morrison,
    support,
    weingarten,
)
from wcf_forge.errors import GeometryError

from oracles import fd_hessian, random_orthogonal, random_psd

H = np.diag([1.0, 3.0])
w = np.array([np.sqrt(0.5), np.sqrt(1 / 6)])
G = np.diag([0.0, 2.0])
v = np.array([np.sqrt(1 / 6), np.sqrt(0.5)])


def test_positive_inverse():
    np.testing.assert_allclose(positive_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    np.testing.assert_allclose(positive_inverse(np.eye(3)), np.eye(3))
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 3))
    M = A @ A.T
    np.testing.assert_allclose(M @ positive_inverse(M) @ M, M, atol=1e-12 * np.abs(M).max())


def test_ellipsoid_map():
    u = np.array([0.6, 0.8])
    np.testing.assert_allclose(ellipsoid_map(np.eye(2), u), u)
    np.testing.assert_allclose(ellipsoid_map(H, w), w)
    np.testing.assert_allclose(ellipsoid_map(4 * np.eye(2), u), u / 2)
    with pytest.raises(GeometryError):
        ellipsoid_map(np.diag([0.0, 1.0]), np.array([1.0, 0.0]))


def test_normal():
    np.testing.assert_allclose(normal(G, v), [0, 1], atol=1e-15)
    np.testing.assert_allclose(normal(H, w), [0.5, np.sqrt(3) / 2])
    u = np.array([0.6, 0.8])
    np.testing.assert_allclose(normal(np.eye(2), u), u)
    with pytest.raises(GeometryError):
        normal(G, np.array([1.0, 0.0]))


def test_weingarten_examples():
    u = np.array([0.6, 0.8])
    np.testing.assert_allclose(weingarten(np.eye(2), u), np.eye(2) - np.outer(u, u), atol=1e-15)
    s3 = np.sqrt(3)
    ref = np.sqrt(0.5) * np.array([[9 / 8, -3 * s3 / 8], [-3 * s3 / 8, 3 / 8]])
    np.testing.assert_allclose(weingarten(H, w), ref, atol=1e-14)
    np.testing.assert_allclose(weingarten(H, w) @ normal(H, w), 0, atol=1e-14)


def test_reverse_weingarten_identity():
    u = np.array([0.6, 0.8])
    np.testing.assert_allclose(reverse_weingarten(np.eye(2), np.eye(2), u), np.eye(2) - np.outer(u, u), atol=1e-15)


def test_orth_component():
    np.testing.assert_allclose(orth_component((H, w), None), [np.sqrt(3) / 2, -0.5])
    np.testing.assert_allclose(orth_component((G, v), None), [1, 0], atol=1e-15)
    np.testing.assert_allclose(orth_component(np.array([1.0, 0.0]), np.array([0.0, 1.0])), [0, 1])
    with pytest.raises(GeometryError):
        orth_component(np.array([1.0, 0.0]), np.array([2.0, 0.0]))


def test_support():
    u = np.array([0.6, 0.8])
    assert support(np.eye(2), u) == pytest.approx(1)
    assert support(np.diag([1, 1 / 3]), np.array([0.5, np.sqrt(3) / 2])) == pytest.approx(np.sqrt(0.5))
    assert support(positive_inverse(np.diag([4.0, 1.0])), np.array([1.0, 0.0])) == pytest.approx(0.5)


def test_sherman_morrison():
    rng = np.random.default_rng(2)
    A = random_psd(rng, 3)
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    Ai = np.linalg.inv(A)
    np.testing.assert_allclose(sherman_morrison(Ai, 0 * a, 0 * b), Ai)
    np.testing.assert_allclose(sherman_morrison(Ai, a, b), np.linalg.inv(A + np.outer(a, b)), atol=1e-10)
    with pytest.raises(GeometryError):
        sherman_morrison(np.eye(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]))


def test_reverse_weingarten_scaling():
    rng = np.random.default_rng(3)
    M = random_psd(rng, 4)
    x = rng.standard_normal(4)
    Mi = np.linalg.inv(M)
    W1 = reverse_weingarten(M, Mi, x)
    W2 = reverse_weingarten(2 * M, Mi / 2, x)
    np.testing.assert_allclose(W2, W1 / np.sqrt(2), atol=1e-12)
    P = Mi / 2
    fd = fd_hessian(lambda u: support(P, u), normal(2 * M, x))
    np.testing.assert_allclose(W2, fd, atol=1e-4)


psd_seed = st.tuples(st.integers(2, 6), st.integers(0, 2**31))


@settings(max_examples=40, deadline=None)
@given(psd_seed)
def test_kernel_and_equivariance(args):
    n, seed = args
    rng = np.random.default_rng(seed)
    M = random_psd(rng, n)
    x = rng.standard_normal(n)
    Mx = M @ x
    assert np.linalg.norm(weingarten(M, x) @ Mx) <= 1e-10 * np.linalg.norm(Mx) * np.abs(M).max()
    assert np.linalg.norm(reverse_weingarten(M, np.linalg.inv(M), x) @ Mx) <= 1e-10 * np.linalg.norm(Mx) * np.abs(M).max()
    Q = random_orthogonal(rng, n)
    np.testing.assert_allclose(weingarten(Q @ M @ Q.T, Q @ x), Q @ weingarten(M, x) @ Q.T, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(psd_seed)
def test_inverse_pairing_and_support_hessian(args):
    n, seed = args
    rng = np.random.default_rng(seed)
    M = random_psd(rng, n)
    x = rng.standard_normal(n)
    Mi = np.linalg.inv(M)
    R = reverse_weingarten(M, Mi, x)
    np.testing.assert_allclose(positive_inverse(R), weingarten(M, x), atol=1e-9)
    fd = fd_hessian(lambda u: support(Mi, u), normal(M, x))
    np.testing.assert_allclose(R, fd, atol=1e-4)
