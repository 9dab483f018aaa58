import pytest
from hypothesis import given
from hypothesis import strategies as st

from caspian.scenario import (
    HOLDOUT_D_X,
    ProtectionScenario,
    ScenarioError,
    holdout_scenarios,
    make_base_scenarios,
    parse_scenario,
    random_scenarios,
)


class TestParseScenario:
    def test_all_zero(self):
        assert parse_scenario("000").bits == (False, False, False)

    def test_direct_map(self):
        assert parse_scenario("101").bits == (True, False, True)

    def test_holdout_first_row_entry(self):
        s = parse_scenario("00110011001100110")
        assert s.d_x == 17
        assert sum(s.bits) == 8

    def test_empty_rejected(self):
        with pytest.raises(ScenarioError):
            parse_scenario("")

    def test_bad_character_names_index(self):
        with pytest.raises(ScenarioError, match="index 2"):
            parse_scenario("01x0")

    @given(st.text(alphabet="01", min_size=1, max_size=40))
    def test_roundtrip(self, text):
        assert parse_scenario(text).as_bitstring() == text


class TestBaseScenarios:
    def test_seventeen_segment_count(self):
        scenarios = make_base_scenarios(17, dedup=False)
        assert len(scenarios) == 4 + 2 * 17 == 38
        strings = [s.as_bitstring() for s in scenarios]
        assert "1" * 17 in strings
        assert "0" * 17 in strings
        assert "1" * 9 + "0" * 8 in strings  # leading-half rule for odd d_x
        assert "0" * 9 + "1" * 8 in strings
        for i in range(17):
            unit = "".join("1" if j == i else "0" for j in range(17))
            assert unit in strings
            assert "".join("0" if j == i else "1" for j in range(17)) in strings

    def test_tiny_with_duplicates_retained(self):
        strings = [s.as_bitstring() for s in make_base_scenarios(2, dedup=False)]
        assert strings == ["11", "10", "01", "00", "10", "01", "01", "10"]

    def test_tiny_dedup(self):
        strings = [s.as_bitstring() for s in make_base_scenarios(2, dedup=True)]
        assert strings == ["11", "10", "01", "00"]

    @pytest.mark.parametrize("d_x", [1, 2, 3, 5, 8, 17])
    def test_count_formula(self, d_x):
        assert len(make_base_scenarios(d_x)) == 4 + 2 * d_x


class TestHoldout:
    def test_count_and_shape(self):
        scenarios = holdout_scenarios()
        assert len(scenarios) == 32
        assert all(s.d_x == HOLDOUT_D_X == 17 for s in scenarios)

    def test_first_and_last(self):
        scenarios = holdout_scenarios()
        assert scenarios[0].as_bitstring() == "00110011001100110"
        assert scenarios[-1].as_bitstring() == "00011111111111000"

    def test_pairwise_distinct(self):
        strings = [s.as_bitstring() for s in holdout_scenarios()]
        assert len(set(strings)) == 32


class TestRandomScenarios:
    def test_empty_request(self):
        assert random_scenarios(0, 5, seed=1) == []

    def test_exhaustion(self):
        out = random_scenarios(4, 2, seed=9)
        assert sorted(s.as_bitstring() for s in out) == ["00", "01", "10", "11"]

    def test_deterministic(self):
        a = random_scenarios(2, 3, seed=7)
        b = random_scenarios(2, 3, seed=7)
        assert [s.bits for s in a] == [s.bits for s in b]

    def test_exclusions_respected(self):
        excl = {parse_scenario("00"), parse_scenario("01")}
        out = random_scenarios(2, 2, seed=3, exclusions=excl)
        assert sorted(s.as_bitstring() for s in out) == ["10", "11"]

    def test_capacity_error(self):
        with pytest.raises(ScenarioError):
            random_scenarios(5, 2, seed=0)

    def test_distinct(self):
        out = random_scenarios(30, 6, seed=11)
        assert len({s.bits for s in out}) == 30


def test_scenario_needs_one_segment():
    with pytest.raises(ScenarioError):
        ProtectionScenario(())
