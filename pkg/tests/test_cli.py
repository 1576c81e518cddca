import csv
import json
import subprocess
import sys
from datetime import date, datetime, timedelta

import pytest

from vbpv import presets
from vbpv.cli import main, parse_range
from vbpv.errors import InputError
from vbpv.solar_geometry import solar_position


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestParseRange:
    def test_colon(self):
        assert parse_range("0:10:5") == [0.0, 5.0, 10.0]
        assert parse_range("0:1:0.1")[-1] == 1.0

    def test_list(self):
        assert parse_range("90, 180") == [90.0, 180.0]

    @pytest.mark.parametrize("text", ["1:2", "5:0:1", "0:5:0", "a,b"])
    def test_invalid(self, text):
        with pytest.raises(InputError):
            parse_range(text)


class TestSunpath:
    def test_key_dates(self, tmp_path, capsys):
        out = tmp_path / "sun.csv"
        code, _, _ = run(["sunpath", "--location", "raipur", "--output", out], capsys)
        assert code == 0
        rows = read_csv(out)
        assert rows[0] == ["timestamp_iso8601", "elevation_deg", "azimuth_deg"]
        assert {r[0][:10] for r in rows[1:]} == {"2023-03-20", "2023-06-21", "2023-09-23", "2023-12-21"}

    def test_bad_latitude(self, tmp_path, capsys):
        code, _, err = run(["sunpath", "--latitude", 95, "--longitude", 80, "--json-errors",
                            "--output", tmp_path / "x.csv"], capsys)
        assert code == 2
        payload = json.loads(err)
        assert "latitude" in payload["message"]
        assert payload["exit_code"] == 2

    def test_full_year_row_count(self, tmp_path, capsys, raipur):
        out = tmp_path / "year.csv"
        assert run(["sunpath", "--full-year", "--year", 2023, "--step", 15, "--output", out], capsys)[0] == 0
        expected = 0
        for k in range(365):
            day = date(2023, 1, 1) + timedelta(days=k)
            t0 = datetime.combine(day, datetime.min.time(), tzinfo=raipur.tzinfo)
            expected += sum(solar_position(raipur, t0 + timedelta(minutes=15 * j)).elevation > 0
                            for j in range(96))
        assert len(read_csv(out)) - 1 == expected


class TestSimulate:
    def test_ef81b_equinox(self, tmp_path, capsys):
        code, out, _ = run(["simulate", "--label", "EF81B", "--date", "2023-03-20",
                            "--output-dir", tmp_path], capsys)
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["two_peaks"] is True
        assert json.loads(out)["energy_kwh"] == summary["energy_kwh"]
        assert read_csv(tmp_path / "series.csv")[0] == ["timestamp", "g_front_wm2", "g_rear_wm2",
                                                        "t_cell_c", "p_dc_w"]
        assert (tmp_path / "profile.dat").read_text().startswith("#")

    def test_night_window(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--label", "SF21MM", "--start", "00:00", "--end", "04:00",
                          "--output-dir", tmp_path], capsys)
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["energy_kwh"] == 0.0

    def test_missing_weather(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--weather-file", tmp_path / "nope.csv",
                            "--output-dir", tmp_path], capsys)
        assert code == 2
        assert "weather-file" in err

    def test_weather_file(self, tmp_path, capsys):
        path = tmp_path / "w.csv"
        path.write_text("timestamp,ghi_wm2,dhi_wm2,dni_wm2,tamb_c\n"
                        "2023-03-20T10:00:00+05:30,700,100,,30\n"
                        "2023-03-20T11:00:00+05:30,850,110,,31\n"
                        "2023-03-20T12:00:00+05:30,900,120,,32\n")
        code, out, _ = run(["simulate", "--weather-file", path, "--start", "10:00", "--end", "12:00",
                            "--output-dir", tmp_path / "o"], capsys)
        assert code == 0
        assert json.loads(out)["energy_kwh"] > 0

    def test_window_outside_weather(self, tmp_path, capsys):
        path = tmp_path / "w.csv"
        path.write_text("timestamp,ghi_wm2,dhi_wm2,dni_wm2,tamb_c\n"
                        "2023-03-20T10:00:00+05:30,700,100,,30\n"
                        "2023-03-20T11:00:00+05:30,850,110,,31\n")
        code, _, err = run(["simulate", "--weather-file", path, "--output-dir", tmp_path / "o"], capsys)
        assert code == 2
        assert "not covered" in err

    def test_deterministic(self, tmp_path, capsys):
        for name in ("a", "b"):
            run(["simulate", "--label", "SF81B", "--output-dir", tmp_path / name], capsys)
        for f in ("series.csv", "summary.json", "profile.dat"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"label": "EF81B", "date": "2023-03-20", "output-dir": str(tmp_path / "c"),
                                   "step": 30}))
        code, out, _ = run(["simulate", "--config", cfg], capsys)
        assert code == 0
        assert json.loads(out)["step_minutes"] == 30

    def test_config_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"label": "EF81B", "step": 30, "output_dir": str(tmp_path / "c")}))
        code, out, _ = run(["simulate", "--config", cfg, "--step", 15], capsys)
        assert json.loads(out)["step_minutes"] == 15

    def test_config_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"colour": "blue"}))
        code, _, err = run(["simulate", "--config", cfg], capsys)
        assert code == 2 and "colour" in err

    def test_bad_label(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--label", "QF10X", "--output-dir", tmp_path], capsys)
        assert code == 2


class TestLayout:
    @pytest.mark.parametrize("preset,kwp", [("conventional", 519.75), ("conventional-poly", 457.38),
                                            ("vertical-sn", 220.1)])
    def test_presets(self, preset, kwp, tmp_path, capsys):
        out = tmp_path / "layout.json"
        code, stdout, _ = run(["layout", "--preset", preset, "--output", out], capsys)
        assert code == 0
        assert json.loads(out.read_text())["capacity_kwp"] == pytest.approx(kwp)
        assert json.loads(stdout)["capacity_kwp"] == pytest.approx(kwp)

    @pytest.mark.parametrize("argv", [["--acres", 0], ["--land-length", 0, "--land-width", 10]])
    def test_zero_area(self, argv, capsys):
        code, _, _ = run(["layout", "--preset", "conventional"] + argv, capsys)
        assert code == 2

    def test_custom_vertical(self, capsys):
        code, out, _ = run(["layout", "--mode", "vertical", "--module", "adani_bifacial_355",
                            "--inter-row", 3.0], capsys)
        assert code == 0
        assert json.loads(out)["total_modules"] == 620


class TestSweep:
    def test_small(self, tmp_path, capsys):
        code, out, _ = run(["sweep", "--tilts", "10:30:10", "--azimuths", "180", "--pitches", "6",
                            "--output-dir", tmp_path], capsys)
        assert code == 0
        assert len(read_csv(tmp_path / "sweep.csv")) == 4
        assert "frontier" in json.loads((tmp_path / "frontier.json").read_text())
        assert out.startswith("tilt=")

    def test_cap(self, tmp_path, capsys):
        code, _, err = run(["sweep", "--tilts", "0:90:1", "--azimuths", "90:270:1", "--pitches", "5",
                            "--output-dir", tmp_path, "--json-errors"], capsys)
        assert code == 2
        assert json.loads(err)["error"] == "SweepTooLargeError"


class TestCompare:
    def test_single(self, capsys):
        code, out, _ = run(["compare", "--locations", "raipur", "--configs", "SF21MM", "--step", 60], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["locations"]["raipur"]["ratio_to_reference"] == {"SF21MM": 1.0}

    def test_duplicates(self, capsys):
        code, _, _ = run(["compare", "--locations", "raipur,raipur", "--configs", "SF21MM"], capsys)
        assert code == 2

    def test_latitude_ordering(self, tmp_path, capsys):
        out = tmp_path / "cmp.csv"
        code, stdout, _ = run(["compare", "--locations", "leh,raipur", "--configs",
                               "conventional,vertical-sn", "--step", 30, "--output", out], capsys)
        assert code == 0
        loc = json.loads(stdout)["locations"]
        assert loc["leh"]["ratio_to_reference"]["vertical-sn"] > loc["raipur"]["ratio_to_reference"]["vertical-sn"]
        assert len(read_csv(out)) == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "vbpv.cli", "layout", "--preset", "vertical-ew"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["total_modules"] == 620
    assert presets.PLANT_PRESETS[-1] == "vertical-ew"
