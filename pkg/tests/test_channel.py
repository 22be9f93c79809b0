import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcexact.channel import Channel, load_channel, mutual_information, pairwise_score_values
from rcexact.errors import ChannelValidationError


class TestConstruction:
    def test_symmetric_channel_has_uniform_output(self):
        ch = load_channel({"W": [[0.75, 0.25], [0.25, 0.75]], "Px": [0.5, 0.5]})
        np.testing.assert_allclose(ch.Py, [0.5, 0.5])

    def test_noiseless_log_nu(self):
        ch = Channel.from_arrays([[1, 0], [0, 1]], [0.5, 0.5])
        assert ch.log_nu[0, 0] == pytest.approx(math.log(2))
        assert ch.log_nu[1, 1] == pytest.approx(math.log(2))
        assert ch.log_nu[0, 1] == -math.inf and ch.log_nu[1, 0] == -math.inf

    def test_unreachable_output_is_pruned(self):
        ch = Channel.from_arrays([[0.5, 0.0, 0.5], [0.2, 0.0, 0.8]], [0.3, 0.7])
        assert ch.num_outputs == 2
        assert ch.pruned_outputs == (1,)
        assert np.all(np.isfinite(ch.log_nu))

    def test_output_only_reached_by_unused_input_is_pruned(self):
        ch = Channel.from_arrays([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0])
        assert ch.pruned_outputs == (1,)

    @pytest.mark.parametrize(
        "doc, fragment",
        [
            ({"W": [[0.5, 0.4], [0.5, 0.5]], "Px": [0.5, 0.5]}, "row 0"),
            ({"W": [[0.5, 0.5]], "Px": [0.5, 0.5]}, "length"),
            ({"W": [[1.2, -0.2], [0.5, 0.5]], "Px": [0.5, 0.5]}, "negative"),
            ({"W": [[0.5, 0.5], [0.5, 0.5]], "Px": [0.5, 0.6]}, "Px sums"),
            ({"Px": [1.0]}, "lacks"),
            ({"W": "abc", "Px": [1.0]}, "malformed|2-D"),
        ],
    )
    def test_validation_errors(self, doc, fragment):
        with pytest.raises(ChannelValidationError, match=fragment):
            load_channel(doc)

    def test_arrays_are_read_only(self, bsc25):
        with pytest.raises(ValueError):
            bsc25.W[0, 0] = 0.1

    def test_document_round_trip(self, bac):
        again = load_channel(bac.to_document())
        np.testing.assert_array_equal(again.W, bac.W)
        np.testing.assert_array_equal(again.Px, bac.Px)


class TestMutualInformation:
    def test_bsc(self, bsc25):
        hb = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
        assert mutual_information(bsc25) == pytest.approx(math.log(2) - hb, rel=1e-14)
        assert mutual_information(bsc25) == pytest.approx(0.130812, abs=5e-7)

    def test_noiseless(self):
        ch = Channel.from_arrays([[1, 0], [0, 1]], [0.5, 0.5])
        assert mutual_information(ch) == pytest.approx(math.log(2))

    def test_independent_rows(self):
        ch = Channel.from_arrays([[0.3, 0.7], [0.3, 0.7]], [0.4, 0.6])
        assert mutual_information(ch) == pytest.approx(0.0, abs=1e-15)


class TestPairwiseScoreValues:
    def test_bsc_output_zero(self, bsc25):
        vals = pairwise_score_values(bsc25, 0)
        assert [v for v, _ in vals] == pytest.approx([math.log(0.5), math.log(1.5)])
        assert [p for _, p in vals] == pytest.approx([0.5, 0.5])

    def test_noiseless_has_minus_infinity_atom(self):
        ch = Channel.from_arrays([[1, 0], [0, 1]], [0.5, 0.5])
        vals = pairwise_score_values(ch, 0)
        assert vals[0] == (-math.inf, 0.5)
        assert vals[1][0] == pytest.approx(math.log(2))

    def test_single_input(self):
        ch = Channel.from_arrays([[0.2, 0.8]], [1.0])
        assert pairwise_score_values(ch, 1) == [(pytest.approx(0.0), pytest.approx(1.0))]

    def test_equal_values_merge(self):
        ch = Channel.from_arrays([[0.5, 0.5], [0.5, 0.5], [0.1, 0.9]], [0.25, 0.25, 0.5])
        vals = pairwise_score_values(ch, 0)
        assert len(vals) == 2


channel_tables = st.integers(2, 4).flatmap(
    lambda nx: st.integers(2, 4).flatmap(
        lambda ny: st.tuples(
            arrays(np.float64, (nx, ny), elements=st.floats(0.0, 1.0)),
            arrays(np.float64, (nx,), elements=st.floats(0.05, 1.0)),
        )
    )
)


@settings(max_examples=60, deadline=None)
@given(channel_tables)
def test_density_and_information_properties(data):
    W, Px = data
    W = W + 1e-3
    W = W / W.sum(axis=1, keepdims=True)
    Px = Px / Px.sum()
    ch = Channel.from_arrays(W, Px)
    assert ch.Py.sum() == pytest.approx(1.0, abs=1e-12)
    # nu is a density with respect to Py
    nu = np.exp(ch.log_nu)
    np.testing.assert_allclose(ch.Px @ nu, 1.0, atol=1e-12)
    for y in range(ch.num_outputs):
        assert sum(p for _, p in pairwise_score_values(ch, y)) == pytest.approx(1.0, abs=1e-12)
    I = mutual_information(ch)
    assert I >= 0
    if np.allclose(ch.log_nu, 0.0, atol=1e-12):
        assert I == pytest.approx(0.0, abs=1e-12)
