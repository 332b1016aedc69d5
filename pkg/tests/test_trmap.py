import math

import numpy as np
import pytest

from brainalign.trmap import TrMapConfig, align_rows, stimulus_to_tr


class TestConfig:
    def test_defaults(self):
        cfg = TrMapConfig()
        assert cfg.tr_seconds == 1.49
        assert cfg.stimulus_stride_seconds == 3.0
        assert cfg.span == 3

    def test_exact_span_without_override(self):
        cfg = TrMapConfig(span_override=None)
        assert cfg.span == math.ceil(5.0 / 1.49) == 4

    def test_validation(self):
        with pytest.raises(ValueError):
            TrMapConfig(tr_seconds=0.0)
        with pytest.raises(ValueError):
            TrMapConfig(tr_policy="middle")
        with pytest.raises(ValueError):
            TrMapConfig(span_override=0)


class TestStimulusToTr:
    def test_first_relevant_reference_values(self):
        cfg = TrMapConfig(tr_policy="first_relevant")
        # onset 3.0 s / 1.49 s = 2.013 -> TR 2
        assert stimulus_to_tr(0, cfg) == 0
        assert stimulus_to_tr(1, cfg) == 2
        assert stimulus_to_tr(2, cfg) == 4

    def test_last_relevant_reference_values(self):
        cfg = TrMapConfig(tr_policy="last_relevant")
        assert stimulus_to_tr(0, cfg) == 2
        assert stimulus_to_tr(1, cfg) == 4

    def test_policies_differ_by_span_minus_one(self):
        first = TrMapConfig(tr_policy="first_relevant")
        last = TrMapConfig(tr_policy="last_relevant")
        for i in range(0, 600, 7):
            assert stimulus_to_tr(i, last) == stimulus_to_tr(i, first) + first.span - 1

    def test_monotone_nondecreasing_over_long_run(self):
        for policy in ("first_relevant", "last_relevant"):
            cfg = TrMapConfig(tr_policy=policy)
            trs = [stimulus_to_tr(i, cfg) for i in range(1075)]
            assert all(b >= a for a, b in zip(trs, trs[1:]))

    def test_rounding_half_away(self):
        # stride 0.745 = tr/2: onset/tr = i/2, the .5 cases round up
        cfg = TrMapConfig(tr_seconds=1.49, stimulus_stride_seconds=0.745)
        assert stimulus_to_tr(1, cfg) == 1
        assert stimulus_to_tr(2, cfg) == 1
        assert stimulus_to_tr(3, cfg) == 2

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            stimulus_to_tr(-1, TrMapConfig())


class TestAlignRows:
    def test_basic_alignment(self):
        cfg = TrMapConfig()
        X = np.arange(10, dtype=float)[:, None]
        Y = np.arange(40, dtype=float)[:, None] * 10
        Xa, Ya = align_rows(X, Y, cfg)
        assert Xa.shape[0] == Ya.shape[0] == 10
        assert np.array_equal(Xa, X)
        expected = [stimulus_to_tr(i, cfg) * 10 for i in range(10)]
        assert Ya[:, 0].tolist() == expected

    def test_out_of_range_names_offenders(self):
        cfg = TrMapConfig()
        X = np.zeros((10, 1))
        Y = np.zeros((5, 1))
        with pytest.raises(ValueError, match="map past the recording"):
            align_rows(X, Y, cfg)

    def test_policy_changes_selection(self):
        X = np.zeros((5, 1))
        Y = np.arange(30, dtype=float)[:, None]
        _, first = align_rows(X, Y, TrMapConfig(tr_policy="first_relevant"))
        _, last = align_rows(X, Y, TrMapConfig(tr_policy="last_relevant"))
        assert np.array_equal(last, first + 2)  # span 3 shifts by 2 rows
