"""File grammars and command-line entry points, end to end."""

import re

import numpy as np
import pytest

from thermodiag.cli import (
    ParseError,
    default_cases,
    main,
    measurements_csv,
    parse_building,
    parse_cases,
    parse_measurements,
    parse_weather,
    weather_csv,
    write_building,
)
from thermodiag.model import build_mesh
from thermodiag.testcell import example_cell, synthetic_weather

DATA = "data"


@pytest.fixture()
def building_text():
    with open(f"{DATA}/example_cell.building", encoding="utf-8") as fh:
        return fh.read()


def write_tmp(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


class TestBuildingGrammar:
    def test_shipped_file_matches_example_cell(self):
        desc = parse_building(f"{DATA}/example_cell.building")
        assert desc == example_cell()
        assert build_mesh(desc).n_nodes == 23

    def test_write_then_parse_round_trips(self, tmp_path):
        desc = example_cell()
        path = write_tmp(tmp_path, "cell.building", write_building(desc))
        assert parse_building(path) == desc

    def test_unphysical_absorptivity_names_section(self, tmp_path, building_text):
        bad = building_text.replace("absorptivity = 0.3", "absorptivity = 1.2")
        path = write_tmp(tmp_path, "bad.building", bad)
        with pytest.raises((ParseError, ValueError), match="absorptivity"):
            parse_building(path)

    def test_empty_file_rejected(self, tmp_path):
        path = write_tmp(tmp_path, "empty.building", "")
        with pytest.raises(ParseError):
            parse_building(path)

    def test_unknown_section_rejected(self, tmp_path, building_text):
        path = write_tmp(tmp_path, "odd.building",
                         "[frobnicator]\nx = 1\n\n" + building_text)
        with pytest.raises(ParseError, match="frobnicator"):
            parse_building(path)

    def test_missing_field_names_key(self, tmp_path, building_text):
        bad = re.sub(r"(?m)^area = 1\.9\n", "", building_text)
        path = write_tmp(tmp_path, "noarea.building", bad)
        with pytest.raises(ParseError, match="area"):
            parse_building(path)

    def test_malformed_layer_tuple_rejected(self, tmp_path, building_text):
        bad = building_text.replace(
            "layers = 0.05 0.23 600.0 1600.0",
            "layers = 0.05 0.23 600.0")
        path = write_tmp(tmp_path, "short.building", bad)
        with pytest.raises(ParseError, match="layers"):
            parse_building(path)


class TestWeatherGrammar:
    def test_shipped_file_parses(self):
        weather = parse_weather(f"{DATA}/example_weather.csv")
        assert weather.n_records == 480
        assert weather.dt == 900.0

    def test_round_trip_preserves_values(self, tmp_path):
        weather = synthetic_weather(days=1)
        path = write_tmp(tmp_path, "w.csv", weather_csv(weather))
        again = parse_weather(path)
        assert again.dt == weather.dt
        assert np.array_equal(again.values, weather.values)

    def test_gap_in_time_grid_rejected(self, tmp_path):
        text = weather_csv(synthetic_weather(days=1))
        lines = text.strip().split("\n")
        del lines[5]
        path = write_tmp(tmp_path, "gap.csv", "\n".join(lines) + "\n")
        with pytest.raises(ParseError, match="grid|spacing|uniform"):
            parse_weather(path)

    def test_wrong_header_rejected(self, tmp_path):
        text = weather_csv(synthetic_weather(days=1))
        bad = text.replace("T_ae", "T_outside", 1)
        path = write_tmp(tmp_path, "hdr.csv", bad)
        with pytest.raises(ParseError, match="header"):
            parse_weather(path)

    def test_non_monotone_timestamps_rejected(self, tmp_path):
        text = weather_csv(synthetic_weather(days=1))
        lines = text.strip().split("\n")
        lines[3], lines[4] = lines[4], lines[3]
        path = write_tmp(tmp_path, "swap.csv", "\n".join(lines) + "\n")
        with pytest.raises(ParseError):
            parse_weather(path)

    def test_non_numeric_cell_rejected(self, tmp_path):
        text = weather_csv(synthetic_weather(days=1))
        lines = text.strip().split("\n")
        cells = lines[1].split(",")
        cells[2] = "cloudy"
        lines[1] = ",".join(cells)
        path = write_tmp(tmp_path, "nan.csv", "\n".join(lines) + "\n")
        with pytest.raises(ParseError):
            parse_weather(path)


class TestMeasurementGrammar:
    def test_shipped_file_keys_by_node_id(self):
        meas = parse_measurements(f"{DATA}/example_measurements.csv")
        assert meas.node_ids == frozenset({3, 14, 16, 19, 20, 23})
        assert meas.n_samples == 480

    def test_round_trip(self, tmp_path):
        meas = parse_measurements(f"{DATA}/example_measurements.csv")
        path = write_tmp(tmp_path, "m.csv", measurements_csv(meas))
        again = parse_measurements(path)
        assert again.node_ids == meas.node_ids
        for node in meas.node_ids:
            assert np.array_equal(again.node_series(node),
                                  meas.node_series(node))

    def test_bad_column_name_rejected(self, tmp_path):
        text = measurements_csv(
            parse_measurements(f"{DATA}/example_measurements.csv"))
        bad = text.replace("node_3", "sensor_3", 1)
        path = write_tmp(tmp_path, "col.csv", bad)
        with pytest.raises(ParseError, match="node_"):
            parse_measurements(path)

    def test_duplicate_column_rejected(self, tmp_path):
        text = measurements_csv(
            parse_measurements(f"{DATA}/example_measurements.csv"))
        bad = text.replace("node_14", "node_3", 1)
        path = write_tmp(tmp_path, "dup.csv", bad)
        with pytest.raises(ParseError, match="duplicate"):
            parse_measurements(path)


class TestCasesGrammar:
    def test_shipped_file_equals_defaults(self):
        assert parse_cases(f"{DATA}/example_cases.txt") == default_cases()

    def test_unknown_kind_rejected(self, tmp_path):
        path = write_tmp(tmp_path, "bad.txt",
                         "[case x]\nkind = paint_colour\nbase = 1\n"
                         "perturbed = 2\n")
        with pytest.raises((ParseError, ValueError)):
            parse_cases(path)


class TestMainSimulate:
    def test_writes_trajectory(self, tmp_path, capsys):
        out = tmp_path / "sim"
        rc = main(["simulate",
                   "--building", f"{DATA}/example_cell.building",
                   "--weather", f"{DATA}/example_weather.csv",
                   "--out", str(out)])
        assert rc == 0
        text = (out / "trajectory.csv").read_text()
        header = text.split("\n", 1)[0]
        assert header.startswith("step,node_1,")
        assert header.endswith("node_23")
        assert len(text.strip().split("\n")) == 1 + 480

    def test_missing_file_exits_2(self, tmp_path, capsys):
        rc = main(["simulate",
                   "--building", "no_such_file.building",
                   "--weather", f"{DATA}/example_weather.csv",
                   "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "no_such_file" in capsys.readouterr().err


class TestMainDiagnose:
    def run(self, tmp_path, name, *extra):
        out = tmp_path / name
        rc = main(["diagnose",
                   "--building", f"{DATA}/example_cell_door_defect.building",
                   "--weather", f"{DATA}/example_weather.csv",
                   "--measurements", f"{DATA}/example_measurements.csv",
                   "--seed", "7", "--generations", "60",
                   "--out", str(out), *extra])
        return rc, out

    def test_finds_door_and_writes_reports(self, tmp_path, capsys):
        rc, out = self.run(tmp_path, "diag", "--exhaustive")
        assert rc == 0
        report = (out / "report.txt").read_text()
        assert "door inside-surface" in report
        for name in ("report.kv", "ga_history.csv", "air_comparison.csv"):
            assert (out / name).exists()
        kv = (out / "report.kv").read_text()
        node = re.search(r"(?m)^best_forcing_set = (.*)$", kv).group(1)
        assert "16" in node.split()
        assert "16" in re.search(
            r"(?m)^oracle_best_set = (.*)$", kv).group(1).split()

    def test_two_runs_byte_identical(self, tmp_path, capsys):
        _, a = self.run(tmp_path, "a")
        _, b = self.run(tmp_path, "b")
        for name in ("report.txt", "report.kv", "ga_history.csv",
                     "air_comparison.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_missing_air_column_exits_2(self, tmp_path, capsys):
        text = open(f"{DATA}/example_measurements.csv").read()
        lines = text.strip().split("\n")
        cols = [c.split(",") for c in lines]
        drop = cols[0].index("node_23")
        stripped = "\n".join(
            ",".join(c for i, c in enumerate(row) if i != drop)
            for row in cols) + "\n"
        meas = write_tmp(tmp_path, "noair.csv", stripped)
        out = tmp_path / "d"
        rc = main(["diagnose",
                   "--building", f"{DATA}/example_cell.building",
                   "--weather", f"{DATA}/example_weather.csv",
                   "--measurements", meas, "--out", str(out)])
        assert rc == 2
        assert "node_23" in capsys.readouterr().err

    @pytest.mark.filterwarnings("ignore::scipy.linalg.LinAlgWarning")
    def test_singular_building_exits_3(self, tmp_path, capsys, building_text):
        # radiant node loses every link when h_ri vanishes
        bad = building_text.replace("h_ri = 5.0", "h_ri = 0.0")
        bpath = write_tmp(tmp_path, "sing.building", bad)
        out = tmp_path / "s"
        rc = main(["diagnose",
                   "--building", bpath,
                   "--weather", f"{DATA}/example_weather.csv",
                   "--measurements", f"{DATA}/example_measurements.csv",
                   "--seed", "7", "--generations", "5",
                   "--out", str(out)])
        assert rc == 3
        assert "singular" in capsys.readouterr().err.lower()


class TestMainVerify:
    def test_default_protocol_passes(self, tmp_path, capsys):
        out = tmp_path / "v"
        rc = main(["verify", "--seed", "11", "--out", str(out)])
        assert rc == 0
        text = (out / "verify_report.txt").read_text()
        assert "4/4 cases passed" in text
        assert (out / "verify_report.kv").exists()

    def test_corrupt_cases_file_exits_2(self, tmp_path, capsys):
        bad = write_tmp(tmp_path, "bad_cases.txt", "kind = nonsense\n")
        rc = main(["verify", "--cases", bad, "--out", str(tmp_path / "v")])
        assert rc == 2


class TestMainStats:
    def test_self_comparison_reports_zero(self, tmp_path, capsys):
        rc = main(["stats",
                   "--building", f"{DATA}/example_cell.building",
                   "--weather", f"{DATA}/example_weather.csv",
                   "--measurements", f"{DATA}/example_measurements.csv"])
        assert rc == 0
        text = capsys.readouterr().out
        assert re.search(r"(?m)^J = 0\.0$", text)
        assert re.search(r"(?m)^residual_mean = 0\.0$", text)
        assert re.search(r"(?m)^n_samples = 480$", text)
