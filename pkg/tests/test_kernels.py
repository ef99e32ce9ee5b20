import numpy as np
import pytest

from persuade import _kernels as K


def test_affine_argmax_matches_reference():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(500, 3))
    coefs = rng.normal(size=(7, 3))
    consts = rng.normal(size=7)
    labels, best = K.affine_argmax(pts, coefs, consts)
    scores = pts @ coefs.T + consts
    assert np.array_equal(labels, np.argmax(scores, axis=1))
    np.testing.assert_allclose(best, scores.max(axis=1), rtol=1e-13)


def test_affine_argmax_tie_breaks_to_smallest_index():
    pts = np.array([[0.0, 0.0]])
    coefs = np.array([[1.0, 1.0], [-1.0, -1.0]])
    consts = np.array([2.0, 2.0])  # both scores exactly 2 at the origin
    labels, best = K.affine_argmax(pts, coefs, consts)
    assert labels[0] == 0
    assert best[0] == 2.0


def test_affine_argmin_negates():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(64, 2))
    coefs = rng.normal(size=(5, 2))
    consts = rng.normal(size=5)
    labels, best = K.affine_argmin(pts, coefs, consts)
    scores = pts @ coefs.T + consts
    assert np.array_equal(labels, np.argmin(scores, axis=1))
    np.testing.assert_allclose(best, scores.min(axis=1), rtol=1e-13)


def test_segment_reduce_matches_bincount():
    rng = np.random.default_rng(2)
    labels = rng.integers(0, 6, size=300)
    w = rng.uniform(0.1, 1.0, size=300)
    pts = rng.normal(size=(300, 2))
    mass, sums = K.segment_reduce(labels, w, pts, 6)
    np.testing.assert_allclose(mass, np.bincount(labels, w, minlength=6), rtol=1e-12)
    for d in range(2):
        np.testing.assert_allclose(
            sums[:, d], np.bincount(labels, w * pts[:, d], minlength=6), rtol=1e-12
        )


@pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba backend disabled")
def test_backends_agree():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(1000, 2))
    coefs = rng.normal(size=(9, 2))
    consts = rng.normal(size=9)
    l_nb, b_nb = K._nb_affine_argmax(pts, coefs, consts)
    l_np, b_np = K._np_affine_argmax(pts, coefs, consts)
    assert np.array_equal(l_nb, l_np)
    np.testing.assert_allclose(b_nb, b_np, rtol=1e-12)

    labels = rng.integers(0, 4, size=1000)
    w = rng.uniform(0.5, 1.5, size=1000)
    m_nb, s_nb = K._nb_segment_reduce(labels, w, pts, 4)
    m_np, s_np = K._np_segment_reduce(labels, w, pts, 4)
    np.testing.assert_allclose(m_nb, m_np, rtol=1e-12)
    np.testing.assert_allclose(s_nb, s_np, rtol=1e-12)
