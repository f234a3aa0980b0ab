import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llgm.core import (
    AdjacencyMatrix,
    CountMatrix,
    InvalidArgumentError,
    ParameterMatrix,
    RegularizationPath,
    RngSpec,
    as_generator,
    make_path,
)


def test_make_path_hundred_points():
    path = make_path(100, 1e-4, 100)
    v = path.values
    assert len(path) == 100
    assert v[0] == 100 and v[-1] == 1e-4
    ratio = (1e-4 / 100) ** (1 / 99)
    np.testing.assert_allclose(v[1:] / v[:-1], ratio, rtol=1e-12)


def test_make_path_two_points():
    eps = 1e-9
    v = make_path(10, 10 * (1 - eps), 2).values
    assert v.tolist() == [10, 10 * (1 - eps)]


def test_make_path_decades():
    np.testing.assert_allclose(make_path(1, 0.01, 3).values, [1, 0.1, 0.01], rtol=1e-14)


@pytest.mark.parametrize("args", [(1, 1, 3), (1, 2, 3), (1, 0, 3), (1, 0.1, 1), (1, -1, 5)])
def test_make_path_rejects(args):
    with pytest.raises(InvalidArgumentError):
        make_path(*args)


@given(
    hi=st.floats(1e-6, 1e6),
    ratio=st.floats(1e-8, 0.999),
    K=st.integers(2, 200),
)
@settings(max_examples=200, deadline=None)
def test_make_path_invariants(hi, ratio, K):
    lo = hi * ratio
    path = make_path(hi, lo, K)
    v = path.values
    assert v[0] == hi and v[-1] == lo and len(v) == K
    assert np.all(np.diff(v) < 0) and np.all(v > 0)
    r = v[1:] / v[:-1]
    np.testing.assert_allclose(r, r[0], rtol=1e-9)
    # the validated constructor accepts it
    RegularizationPath(v)


def test_regularization_path_rejects_unsorted():
    with pytest.raises(InvalidArgumentError):
        RegularizationPath(np.array([1.0, 2.0]))


def test_count_matrix_validation():
    X = CountMatrix(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert X.shape == (2, 2) and X.is_integer
    assert X.sample_ids == ("s0", "s1") and X.variable_ids == ("v0", "v1")
    for bad in ([[1.0, -1.0], [0, 0]], [[1.0, np.nan], [0, 0]], [[1.0, 2.0]], [[1.0], [2.0]]):
        with pytest.raises(InvalidArgumentError):
            CountMatrix(np.array(bad))
    with pytest.raises(InvalidArgumentError):
        CountMatrix(np.ones((2, 2)), ["a", "a"], ["x", "y"])
    with pytest.raises(InvalidArgumentError):
        CountMatrix(np.ones((2, 2)), ["a", "b"], ["x"])


def test_count_matrix_is_immutable():
    X = CountMatrix(np.ones((3, 2)))
    with pytest.raises(ValueError):
        X.values[0, 0] = 5


def test_count_matrix_subsets_keep_labels():
    X = CountMatrix(np.arange(12.0).reshape(4, 3), list("abcd"), list("xyz"))
    Y = X.take_rows([1, 3]).take_columns([0, 2])
    assert Y.sample_ids == ("b", "d") and Y.variable_ids == ("x", "z")
    np.testing.assert_array_equal(Y.values, [[3, 5], [9, 11]])


def test_parameter_matrix():
    theta = np.array([[0.0, 0.5], [0.0, 0.0]])
    P = ParameterMatrix(theta)
    assert P.p == 2
    with pytest.raises(InvalidArgumentError):
        ParameterMatrix(np.ones((2, 2)))
    with pytest.raises(InvalidArgumentError):
        ParameterMatrix(np.array([[0.0, np.inf], [0.0, 0.0]]))


def test_adjacency_matrix():
    A = AdjacencyMatrix.from_edges(4, [(0, 1), (2, 3)])
    assert A.n_edges == 2
    assert A.edge_list() == [(0, 1), (2, 3)]
    np.testing.assert_array_equal(A.degrees(), [1, 1, 1, 1])
    with pytest.raises(InvalidArgumentError):
        AdjacencyMatrix(np.array([[0, 1], [0, 0]]))
    with pytest.raises(InvalidArgumentError):
        AdjacencyMatrix(np.array([[1, 0], [0, 0]]))
    with pytest.raises(InvalidArgumentError):
        AdjacencyMatrix(np.array([[0, 2], [2, 0]]))


def test_rng_streams_are_reproducible_and_distinct():
    a = RngSpec(7, 3).generator().random(5)
    b = RngSpec(7, 3).generator().random(5)
    c = RngSpec(7, 4).generator().random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_streams_independent_of_draw_order():
    # drawing stream 1 before stream 0 must not change stream 0
    first = RngSpec(1, 0).generator().integers(0, 1000, 10)
    RngSpec(1, 1).generator().integers(0, 1000, 10)
    again = RngSpec(1, 0).generator().integers(0, 1000, 10)
    np.testing.assert_array_equal(first, again)


def test_as_generator_accepts_common_inputs():
    assert isinstance(as_generator(None), np.random.Generator)
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    np.testing.assert_array_equal(as_generator(5).random(3), as_generator(5).random(3))
    np.testing.assert_array_equal(as_generator(RngSpec(5, 0)).random(3),
                                  RngSpec(5, 0).generator().random(3))
