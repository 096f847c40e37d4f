import math

import numpy as np
import pytest

from pendellosung import FormFactorRangeError, FormFactorTable
from pendellosung.formfactor import (
    GERMANIUM_TABLE,
    SILICON_TABLE,
    table_from_csv,
    table_to_csv,
)

A0_SI = 5.43072


def q_of(n_sq, a0=A0_SI):
    return math.sqrt(n_sq) / (2 * a0)


# Survey values: reflection -> (h^2+k^2+l^2, f)
SI_SAMPLES = {
    "111": (3, 0.7526),
    "422": (24, 0.4788),
    "511": (27, 0.4600),
    "531": (35, 0.4150),
    "620": (40, 0.3902),
    "533": (43, 0.3764),
    "551": (51, 0.3432),
    "711": (51, 0.3432),
    "642": (56, 0.3249),
}


class TestBuiltinTables:
    @pytest.mark.parametrize("label", sorted(SI_SAMPLES))
    def test_si_samples_exact(self, label):
        n_sq, f = SI_SAMPLES[label]
        assert SILICON_TABLE.f_at(q_of(n_sq)) == pytest.approx(f, abs=1e-12)

    def test_normalization(self):
        assert SILICON_TABLE.f_at(0.0) == 1.0
        assert GERMANIUM_TABLE.f_at(0.0) == 1.0

    def test_ge_111(self):
        q = math.sqrt(3) / (2 * 5.6575)
        assert q == pytest.approx(0.153076, abs=1e-6)
        assert GERMANIUM_TABLE.f_at(q) == pytest.approx(0.8542, abs=1e-12)

    def test_shared_q_deduplicated(self):
        # (551) and (711) share q = sqrt(51)/(2 a0); one sample holds both.
        qs = [s[0] for s in SILICON_TABLE.samples]
        assert len(qs) == len(set(qs)) == 9

    def test_monotone_everywhere(self):
        qs = np.linspace(0.0, SILICON_TABLE.q_max, 4000)
        fs = np.array([SILICON_TABLE.f_at(q) for q in qs])
        assert np.all(np.diff(fs) <= 1e-12)
        assert np.all(fs > 0) and np.all(fs <= 1.0)

    def test_extrapolation_margin(self):
        edge = SILICON_TABLE.q_max
        inside = SILICON_TABLE.f_at(edge * 1.049)
        assert 0 < inside < SILICON_TABLE.f_at(edge)
        with pytest.raises(FormFactorRangeError):
            SILICON_TABLE.f_at(edge * 1.051)
        with pytest.raises(FormFactorRangeError):
            SILICON_TABLE.f_at(-0.1)


class TestTableConstruction:
    def test_first_sample_must_normalize(self):
        with pytest.raises(ValueError):
            FormFactorTable(element="X", samples=((0.0, 0.99), (0.2, 0.8)))
        with pytest.raises(ValueError):
            FormFactorTable(element="X", samples=((0.1, 1.0), (0.2, 0.8)))

    def test_monotone_samples_required(self):
        with pytest.raises(ValueError):
            FormFactorTable(element="X", samples=((0.0, 1.0), (0.2, 0.8), (0.3, 0.85)))

    def test_duplicate_q_conflict(self):
        with pytest.raises(ValueError):
            FormFactorTable(element="X", samples=((0.0, 1.0), (0.2, 0.8), (0.2, 0.7)))

    def test_duplicate_q_agreeing_collapses(self):
        t = FormFactorTable(element="X", samples=((0.0, 1.0), (0.2, 0.8), (0.2, 0.8)))
        assert len(t.samples) == 2


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "ff.csv"
        table_to_csv(SILICON_TABLE, path)
        again = table_from_csv(path, element="Si")
        for (q1, f1), (q2, f2) in zip(SILICON_TABLE.samples, again.samples):
            assert q2 == pytest.approx(q1, rel=1e-5)
            assert f2 == pytest.approx(f1, rel=1e-5)

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("q,f\n0,1\n0.2,0.8\n")
        with pytest.raises(ValueError):
            table_from_csv(path)

    def test_first_row_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("q_over_4pi_A_inv,f\n0.1,0.9\n0.2,0.8\n")
        with pytest.raises(ValueError):
            table_from_csv(path)
