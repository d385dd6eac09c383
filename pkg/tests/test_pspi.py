import itertools
import warnings

import pytest
from hypothesis import given, strategies as st

from painsight.errors import RangeError
from painsight.labels import PainLabel
from painsight.pspi import (
    ActionUnitVector,
    BinarizationPolicy,
    binarize_pspi,
    compute_pspi,
    read_au_file,
    write_au_file,
)


def brute_force_pspi(au4, au6, au7, au9, au10, au43):
    """Independent re-statement of the score used as the test oracle."""
    cheek_or_lid = au6 if au6 >= au7 else au7
    nose_or_lip = au9 if au9 >= au10 else au10
    return au4 + cheek_or_lid + nose_or_lip + au43


intensity = st.integers(min_value=0, max_value=5)
binary = st.integers(min_value=0, max_value=1)
au_vectors = st.builds(
    ActionUnitVector, au4=intensity, au6=intensity, au7=intensity,
    au9=intensity, au10=intensity, au43=binary,
)


class TestComputePspi:
    def test_all_zero(self):
        assert compute_pspi(ActionUnitVector()) == 0

    def test_maximum(self):
        aus = ActionUnitVector(au4=5, au6=5, au7=5, au9=5, au10=5, au43=1)
        assert compute_pspi(aus) == 16

    def test_hand_computed_example(self):
        aus = ActionUnitVector(au4=2, au6=3, au7=1, au9=0, au10=4, au43=1)
        assert compute_pspi(aus) == 2 + 3 + 4 + 1

    def test_out_of_range_intensity(self):
        with pytest.raises(RangeError):
            ActionUnitVector(au4=6)
        with pytest.raises(RangeError):
            ActionUnitVector(au6=-1)
        with pytest.raises(RangeError):
            ActionUnitVector(au43=2)

    @given(au_vectors, st.sampled_from(["au4", "au6", "au7", "au9", "au10", "au43"]))
    def test_monotone_in_every_component(self, aus, name):
        cap = 1 if name == "au43" else 5
        current = getattr(aus, name)
        if current >= cap:
            return
        bumped = ActionUnitVector(**{**vars(aus), name: current + 1})
        assert compute_pspi(bumped) >= compute_pspi(aus)

    def test_eyes_closed_adds_exactly_one(self):
        for au4, au6, au9 in itertools.product(range(6), range(6), range(6)):
            base = ActionUnitVector(au4=au4, au6=au6, au9=au9)
            closed = ActionUnitVector(au4=au4, au6=au6, au9=au9, au43=1)
            assert compute_pspi(closed) - compute_pspi(base) == 1


class TestBinarize:
    def test_paper_thresholds(self):
        assert binarize_pspi(0) is PainLabel.NO_PAIN
        assert binarize_pspi(4) is PainLabel.PAIN
        assert binarize_pspi(2) is PainLabel.EXCLUDED

    def test_full_default_mapping(self):
        expected = (
            [PainLabel.NO_PAIN]
            + [PainLabel.EXCLUDED] * 3
            + [PainLabel.PAIN] * 13
        )
        assert [binarize_pspi(s) for s in range(17)] == expected

    def test_custom_policy(self):
        policy = BinarizationPolicy(no_pain_max=1, pain_min=3)
        assert binarize_pspi(1, policy) is PainLabel.NO_PAIN
        assert binarize_pspi(2, policy) is PainLabel.EXCLUDED
        assert binarize_pspi(3, policy) is PainLabel.PAIN

    def test_score_out_of_range(self):
        with pytest.raises(RangeError):
            binarize_pspi(17)
        with pytest.raises(RangeError):
            binarize_pspi(-1)

    def test_bad_policy(self):
        with pytest.raises(RangeError):
            BinarizationPolicy(no_pain_max=4, pain_min=4)
        with pytest.raises(RangeError):
            BinarizationPolicy(no_pain_max=0, pain_min=17)

    @given(au_vectors)
    def test_never_pain_when_all_zero_base(self, aus):
        if compute_pspi(aus) == 0:
            assert binarize_pspi(compute_pspi(aus)) is PainLabel.NO_PAIN


class TestAuFile:
    def test_round_trip(self, tmp_path):
        rows = [
            ActionUnitVector(),
            ActionUnitVector(au4=2, au6=1, au43=1),
            ActionUnitVector(au4=5, au10=3),
        ]
        path = tmp_path / "au.csv"
        write_au_file(path, rows)
        assert read_au_file(path) == rows

    def test_missing_column_defaults_with_warning(self, tmp_path):
        path = tmp_path / "au.csv"
        path.write_text("frame_index,au4,au6\n0,2,1\n1,0,0\n")
        with pytest.warns(UserWarning, match="missing AU columns"):
            rows = read_au_file(path)
        assert rows[0] == ActionUnitVector(au4=2, au6=1)

    def test_real_valued_rounded_with_warning(self, tmp_path):
        path = tmp_path / "au.csv"
        path.write_text(
            "frame_index,au4,au6,au7,au9,au10,au43\n0,1.6,0,0,0,0,0\n"
        )
        with pytest.warns(UserWarning, match="rounded"):
            rows = read_au_file(path)
        assert rows[0].au4 == 2

    def test_integral_floats_do_not_warn(self, tmp_path):
        path = tmp_path / "au.csv"
        path.write_text(
            "frame_index,au4,au6,au7,au9,au10,au43\n0,1.0,0,0,0,0,1\n"
        )
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            rows = read_au_file(path)
        assert rows[0] == ActionUnitVector(au4=1, au43=1)

    def test_bad_frame_order(self, tmp_path):
        path = tmp_path / "au.csv"
        path.write_text("frame_index,au4,au6,au7,au9,au10,au43\n1,0,0,0,0,0,0\n")
        with pytest.raises(RangeError):
            read_au_file(path)
