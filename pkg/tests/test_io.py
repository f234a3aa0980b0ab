import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from llgm.core import AdjacencyMatrix, CountMatrix, ParseError
from llgm.io import (
    adjacency_edges,
    ingest,
    read_edge_list,
    write_counts,
    write_edge_list,
)


def write(path, text):
    path.write_text(text)
    return path


def test_ingest_tsv(tmp_path):
    f = write(tmp_path / "x.tsv", "id\ta\tb\ns1\t1\t2\ns2\t3\t4\ns3\t0\t7\n")
    X = ingest(f)
    assert X.shape == (3, 2)
    assert X.sample_ids == ("s1", "s2", "s3") and X.variable_ids == ("a", "b")
    np.testing.assert_array_equal(X.values, [[1, 2], [3, 4], [0, 7]])


def test_ingest_csv_transposed(tmp_path):
    f = write(tmp_path / "x.csv", "gene,s1,s2,s3\ng1,1,3,0\ng2,2,4,7\n")
    X = ingest(f, "variables-by-samples")
    assert X.sample_ids == ("s1", "s2", "s3") and X.variable_ids == ("g1", "g2")
    np.testing.assert_array_equal(X.values, [[1, 2], [3, 4], [0, 7]])


@pytest.mark.parametrize("text, match", [
    ("id\ta\tb\ns1\t1\t-2\ns2\t3\t4\n", "'s1'.*'b'"),
    ("id\ta\tb\ns1\t1\tx\ns2\t3\t4\n", "non-numeric"),
    ("id\ta\tb\ns1\t1\ns2\t3\t4\n", "line 2"),
    ("id\ta\ta\ns1\t1\t2\ns2\t3\t4\n", "duplicate column"),
    ("id\ta\tb\ns1\t1\t2\ns1\t3\t4\n", "duplicate row"),
    ("id\ta\tb\n", "header"),
])
def test_ingest_errors(tmp_path, text, match):
    f = write(tmp_path / "bad.tsv", text)
    with pytest.raises(ParseError, match=match):
        ingest(f)


def test_ingest_bad_orientation(tmp_path):
    f = write(tmp_path / "x.tsv", "id\ta\tb\ns1\t1\t2\ns2\t3\t4\n")
    with pytest.raises(ParseError):
        ingest(f, "rows")


@given(hnp.arrays(np.int64, st.tuples(st.integers(2, 6), st.integers(2, 5)),
                  elements=st.integers(0, 10 ** 9)),
       st.sampled_from(["x.tsv", "x.csv"]),
       st.sampled_from(["samples-by-variables", "variables-by-samples"]))
@settings(max_examples=50, deadline=None)
def test_round_trip_is_bit_identical(tmp_path_factory, values, name, orientation):
    d = tmp_path_factory.mktemp("rt")
    X = CountMatrix(values.astype(float))
    write_counts(X, d / name, orientation)
    Y = ingest(d / name, orientation)
    np.testing.assert_array_equal(X.values, Y.values)
    assert X.sample_ids == Y.sample_ids and X.variable_ids == Y.variable_ids
    write_counts(Y, d / ("again_" + name), orientation)
    assert (d / name).read_bytes() == (d / ("again_" + name)).read_bytes()


def test_edge_list_round_trip(tmp_path):
    labels = ["a", "b", "c", "d"]
    A = AdjacencyMatrix.from_edges(4, [(0, 3), (1, 2)], labels)
    write_edge_list(adjacency_edges(A), tmp_path / "e.tsv")
    assert (tmp_path / "e.tsv").read_text() == "node_a\tnode_b\tweight\na\td\t1\nb\tc\t1\n"
    B = read_edge_list(tmp_path / "e.tsv", labels)
    np.testing.assert_array_equal(A.edges, B.edges)


def test_edge_list_unknown_node(tmp_path):
    f = write(tmp_path / "e.tsv", "node_a\tnode_b\tweight\na\tz\t1\na\tb\t1\n")
    with pytest.raises(ParseError, match="'z'"):
        read_edge_list(f, ["a", "b"])
    assert read_edge_list(f, ["a", "b"], drop_unknown=True).n_edges == 1
