import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BAC_W, BEC_PX, BEC_W, TERNARY_W
from rcexact.channel import Channel, bsc
from rcexact.errors import DomainError
from rcexact.lattice import (
    LatticeCell,
    classify,
    classify_nu_lattice,
    commensurate_ratio,
    lattice_span_of_groups,
    points_strongly_nonlattice,
    real_gcd,
    score_support,
    strongly_nonlattice_check,
)


class TestRealGcd:
    @pytest.mark.parametrize(
        "values, expected",
        [
            ([2.0, 3.0], 1.0),
            ([math.log(3), 2 * math.log(3)], math.log(3)),
            ([0.6, 0.9, 1.5], 0.3),
            ([1.0, math.sqrt(2)], 0.0),
            ([math.log(2), math.log(3)], 0.0),
        ],
    )
    def test_values(self, values, expected):
        assert real_gcd(values) == pytest.approx(expected, abs=1e-12)

    def test_order_independent(self):
        vals = [0.35, 0.21, 0.49]
        assert real_gcd(vals) == pytest.approx(real_gcd(vals[::-1]), abs=1e-15)

    def test_rational_within_cap(self):
        assert commensurate_ratio(7 / 13) == pytest.approx(7 / 13)
        assert commensurate_ratio(math.pi) is None


class TestLatticeSpan:
    def test_bsc_span(self, bsc25):
        h, per_y = classify_nu_lattice(bsc25)
        assert h == pytest.approx(math.log(3), abs=1e-12)
        assert all(s.multiplier == 1 for s in per_y)

    def test_bac_is_nonlattice(self, bac):
        assert classify_nu_lattice(bac)[0] == 0.0

    def test_bec_degenerate_outputs_impose_nothing(self, bec):
        h, per_y = classify_nu_lattice(bec)
        assert h == pytest.approx(math.log(1.5), abs=1e-12)
        assert [s.span is None for s in per_y] == [True, False, True]

    def test_multipliers_differ_across_outputs(self):
        groups = [np.array([0.0, 0.2, 0.4]), np.array([1.0, 1.3]), np.array([5.0])]
        h, per_y = lattice_span_of_groups(groups)
        assert h == pytest.approx(0.1)
        assert [s.multiplier for s in per_y] == [2, 3, None]

    def test_all_outputs_degenerate(self):
        ch = Channel.from_arrays([[1, 0], [0, 1]], [0.5, 0.5])
        with pytest.raises(DomainError, match="degenerate"):
            classify_nu_lattice(ch)

    def test_grid_integrity(self, bsc25):
        h, per_y = classify_nu_lattice(bsc25)
        for s in per_y:
            k = (bsc25.log_nu[:, s.y] - s.offset) / h
            np.testing.assert_allclose(k, np.round(k), atol=1e-9)

    def test_input_permutation_invariance(self):
        W = np.array([[0.6, 0.3, 0.1], [0.1, 0.3, 0.6], [0.2, 0.2, 0.6]])
        Px = np.array([0.5, 0.3, 0.2])
        a = classify(Channel.from_arrays(W, Px))
        b = classify(Channel.from_arrays(W[[2, 0, 1]], Px[[2, 0, 1]]))
        assert a.h == pytest.approx(b.h) and a.strongly_nonlattice == b.strongly_nonlattice

    @settings(max_examples=40, deadline=None)
    @given(
        h=st.floats(0.05, 2.0),
        ks=st.lists(st.lists(st.integers(-20, 20), min_size=2, max_size=4), min_size=1, max_size=3),
        offsets=st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    )
    def test_snapping_is_idempotent(self, h, ks, offsets):
        groups = [off + h * np.array(k, dtype=float) for off, k in zip(offsets, ks)]
        if all(len(set(k)) < 2 for k in ks):
            return
        h1, per1 = lattice_span_of_groups(groups)
        assert h1 > 0
        snapped = [s.offset + h1 * np.round((g - s.offset) / h1) for g, s in zip(groups, per1)]
        h2, _ = lattice_span_of_groups(snapped)
        assert h2 == pytest.approx(h1, rel=1e-9)


class TestStronglyNonlattice:
    def test_few_points_never_qualify(self):
        assert not points_strongly_nonlattice(np.array([[0, 0], [1, 0.3], [0.2, 1.7]]))

    def test_collinear_points(self):
        pts = np.array([[0, 0], [1, 1], [2.5, 2.5], [math.pi, math.pi]])
        assert not points_strongly_nonlattice(pts)

    def test_integer_grid_points(self):
        pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [2, 1]], dtype=float)
        assert not points_strongly_nonlattice(pts)

    def test_points_on_equispaced_parallel_lines(self):
        # x-coordinates lie in {0, 1}: irrational y-coordinates do not help
        pts = np.array([[0, 0], [0, math.sqrt(2)], [1, math.pi], [1, math.e]])
        assert not points_strongly_nonlattice(pts)

    def test_generic_points(self):
        pts = np.array([[0, 0], [1, 0], [0, 1], [math.sqrt(2), math.sqrt(3)]])
        assert points_strongly_nonlattice(pts)

    def test_bsc(self, bsc25):
        assert not strongly_nonlattice_check(bsc25, 0.6)

    def test_ternary_symmetric(self, ternary):
        assert not strongly_nonlattice_check(ternary, 0.6)

    def test_asymmetric_bec(self, bec):
        assert strongly_nonlattice_check(bec, 0.6)

    def test_two_outputs_always_project_to_two_points(self, bac):
        # Z - eta Z' depends on the output alone, so two outputs give a lattice direction
        eta = 0.55
        pts = score_support(bac, eta)
        proj = pts[:, 0] - eta * pts[:, 1]
        assert len(np.unique(np.round(proj, 12))) == 2
        assert not strongly_nonlattice_check(bac, eta)


class TestLatticeCells:
    @pytest.mark.parametrize("p", [0.05, 0.11, 0.25, 0.4])
    def test_bsc_family(self, p):
        assert classify(bsc(p)).table1_cell is LatticeCell.LATTICE_NOT_SNL

    def test_bec(self, bec):
        assert classify(bec).table1_cell is LatticeCell.LATTICE_SNL

    def test_bec_with_uniform_input_merges_points(self):
        lc = classify(Channel.from_arrays(BEC_W, [0.5, 0.5]))
        assert lc.support_points == 3 and lc.table1_cell is LatticeCell.LATTICE_NOT_SNL

    def test_ternary(self, ternary):
        assert classify(ternary).table1_cell is LatticeCell.NONLATTICE_NOT_SNL

    def test_binary_input_ternary_output_asymmetric(self):
        ch = Channel.from_arrays([[0.7, 0.2, 0.1], [0.15, 0.25, 0.6]], [0.5, 0.5])
        assert classify(ch).table1_cell is LatticeCell.NONLATTICE_SNL

    def test_as_dict_is_serialisable(self, bsc25):
        import json

        json.dumps(classify(bsc25).as_dict())
