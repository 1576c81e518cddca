"""Command-line front end: ``vbpv sunpath|simulate|layout|sweep|compare``.

Every subcommand accepts ``--config FILE``: a JSON object whose keys are
that subcommand's flag names (kebab- or snake-case). Flags given on the
command line override the file. Exit codes: 0 success, 2 input error,
3 computation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import date, datetime, time, timedelta
from pathlib import Path

import numpy as np

from . import presets
from .errors import ComputationError, InputError
from .irradiance import load_weather_csv
from .module_model import load_module_spec
from .mounting import MountingConfig
from .plant_layout import LandParcel, pack_conventional, pack_vertical, write_layout_json
from .simulation import (
    Plant,
    clearsky_day,
    clearsky_year,
    compare_configurations,
    simulate,
    write_gnuplot_profile,
    write_series_csv,
    write_summary_json,
)
from .solar_geometry import Location, sun_path_table, write_sun_path_csv
from .sweep import (
    DEFAULT_CAP,
    OBJECTIVES,
    SweepSpec,
    grid_sweep,
    sweep_frontier,
    write_frontier_json,
    write_sweep_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3
KEY_DATES = ("03-20", "06-21", "09-23", "12-21")


# ----------------------------- argument helpers -----------------------------


def parse_range(text: str) -> list[float]:
    """``a:b:step`` (inclusive of b) or a comma-separated list."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"range {text!r} must be start:stop:step")
        a, b, s = (float(p) for p in parts)
        if s <= 0 or b < a:
            raise InputError(f"range {text!r} needs step > 0 and stop >= start")
        n = int(np.floor((b - a) / s + 1e-9))
        return [round(a + k * s, 10) for k in range(n + 1)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"cannot parse number list {text!r}") from None


def _split(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(x) for x in text]
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _parse_date(text: str, field: str = "date") -> date:
    try:
        return date.fromisoformat(str(text))
    except ValueError:
        raise InputError(f"{field}: {text!r} is not an ISO date (YYYY-MM-DD)") from None


def _parse_time(text: str, field: str) -> time:
    try:
        return time.fromisoformat(str(text))
    except ValueError:
        raise InputError(f"{field}: {text!r} is not a time (HH:MM)") from None


def _location(args) -> Location:
    if args.latitude is not None or args.longitude is not None:
        if args.latitude is None or args.longitude is None:
            raise InputError("latitude and longitude must be given together")
        return Location(args.latitude, args.longitude, args.utc_offset, args.albedo, "custom")
    site = presets.location(args.location)
    if args.albedo != site.albedo:
        site = Location(site.latitude, site.longitude, site.utc_offset, args.albedo, site.name)
    return site


def _module(args):
    if args.module_file:
        return load_module_spec(args.module_file)
    return presets.module(args.module)


def _require_file(path, field):
    if path and not Path(path).is_file():
        raise InputError(f"{field}: file not found: {path}")


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ----------------------------- subcommands -----------------------------


def cmd_sunpath(args) -> int:
    site = _location(args)
    if args.dates:
        days = [_parse_date(d, "dates") for d in _split(args.dates)]
    elif args.full_year:
        start = date(args.year, 1, 1)
        days = [start + timedelta(days=k) for k in range((date(args.year + 1, 1, 1) - start).days)]
    else:
        days = [_parse_date(f"{args.year}-{md}") for md in KEY_DATES]
    rows = sun_path_table(site, days, args.step)
    write_sun_path_csv(rows, args.output)
    print(f"wrote {len(rows)} rows for {len(days)} dates to {args.output}")
    return EXIT_OK


def _plant_from_args(args) -> Plant:
    if args.plant:
        return presets.plant(args.plant)
    if args.tilt is not None:
        spec = _module(args)
        return Plant(spec, MountingConfig(args.tilt, args.azimuth, args.row_pitch))
    plant = presets.configuration(args.label)
    if args.row_pitch is not None:
        m = plant.mounting
        plant = Plant(plant.spec, MountingConfig(m.tilt, m.surface_azimuth, args.row_pitch,
                                                 m.lower_edge, m.label, m.landscape))
    return plant


def cmd_simulate(args) -> int:
    _require_file(args.weather_file, "weather-file")
    _require_file(args.module_file, "module-file")
    site = _location(args)
    plant = _plant_from_args(args)
    tz = site.tzinfo
    if args.full_year:
        window = (datetime(args.year, 1, 1, tzinfo=tz), datetime(args.year + 1, 1, 1, tzinfo=tz))
    else:
        day = _parse_date(args.date)
        t0 = _parse_time(args.start, "start") if args.start else time(0, 0)
        start = datetime.combine(day, t0, tzinfo=tz)
        end = (datetime.combine(day, _parse_time(args.end, "end"), tzinfo=tz) if args.end
               else datetime.combine(day, time(0, 0), tzinfo=tz) + timedelta(days=1))
        window = (start, end)

    if args.weather_file:
        weather = load_weather_csv(args.weather_file, site)
        result = simulate(plant, weather, site, window, args.step, args.engine)
    elif args.full_year:
        result = clearsky_year(plant, site, args.year, args.step, args.engine, args.ambient)
    else:
        result = clearsky_day(plant, site, window[0].date(), args.step, args.engine, window,
                              ambient_temp=args.ambient)

    out = _out_dir(args.output_dir)
    write_series_csv(result, out / "series.csv")
    write_summary_json(result, out / "summary.json")
    write_gnuplot_profile(result, out / "profile.dat")
    print(json.dumps(result.summary(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_layout(args) -> int:
    _require_file(args.module_file, "module-file")
    if args.land_length is not None or args.land_width is not None:
        land = LandParcel(args.land_length or 0.0, args.land_width or 0.0)
    else:
        if args.acres <= 0:
            raise InputError(f"acres must be > 0, got {args.acres}")
        land = LandParcel.square_acres(args.acres)
    if args.preset:
        layout = presets.plant_layout(args.preset, land)
    elif args.mode == "vertical":
        layout = pack_vertical(land, _module(args), args.inter_row, args.structure_width,
                               landscape=not args.portrait, inter_module_gap=args.gap,
                               tilt=args.tilt if args.tilt is not None else 81.0,
                               surface_azimuth=args.azimuth)
    else:
        tilt = args.tilt if args.tilt is not None else presets.CONVENTIONAL_TILT
        layout = pack_conventional(land, _module(args), tilt, args.inter_row, args.gap,
                                   surface_azimuth=args.azimuth, landscape=args.landscape,
                                   strings_per_table=args.strings_per_table)
    if args.output and args.output != "-":
        write_layout_json(layout, args.output)
    print(json.dumps(layout.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    _require_file(args.weather_file, "weather-file")
    _require_file(args.module_file, "module-file")
    site = _location(args)
    spec = SweepSpec(
        parse_range(args.tilts), parse_range(args.azimuths), parse_range(args.pitches),
        objective=args.objective, lam=args.lam,
        weather_source="file" if args.weather_file else "clearsky_year",
        weather_path=args.weather_file, year=args.year, step_minutes=args.step,
    )
    land = LandParcel.square_acres(args.acres)
    ranked, evaluated = grid_sweep(spec, land, _module(args), site, args.cap, args.workers)
    out = _out_dir(args.output_dir)
    write_sweep_csv(ranked, out / "sweep.csv")
    write_frontier_json(sweep_frontier(evaluated), out / "frontier.json")
    for p in ranked[: args.top]:
        print(f"tilt={p.tilt:g} azimuth={p.azimuth:g} pitch={p.pitch:g} objective={p.objective:.6g}")
    return EXIT_OK


def cmd_compare(args) -> int:
    locations = _split(args.locations)
    configs = _split(args.configs)
    for name, items in (("locations", locations), ("configs", configs)):
        if not items:
            raise InputError(f"{name} must not be empty")
        dupes = sorted({x for x in items if items.count(x) > 1})
        if dupes:
            raise InputError(f"{name}: duplicate entries {dupes}")
    if args.weather == "file" and not args.weather_dir:
        raise InputError("weather 'file' needs --weather-dir with <location>.csv files")
    reference = args.reference or ("conventional" if "conventional" in configs else configs[0])
    if reference not in configs:
        raise InputError(f"reference {reference!r} is not among configs")

    table = {}
    for loc_name in locations:
        site = presets.location(loc_name)
        results = {}
        for cfg in configs:
            plant = presets.resolve_plant(cfg, site)
            if args.weather == "file":
                path = Path(args.weather_dir) / f"{loc_name}.csv"
                _require_file(str(path), "weather-dir")
                results[cfg] = simulate(plant, load_weather_csv(path, site), site, None, args.step)
            else:
                results[cfg] = clearsky_year(plant, site, args.year, args.step)
        ratios = compare_configurations(results)
        table[loc_name] = {
            "specific_yield_kwh_per_kwp_year": {
                c: results[c].specific_energy * 365.0 / results[c].days for c in configs},
            "ratio_to_reference": {c: ratios.ratio(c, reference) for c in configs},
        }

    report = {"reference": reference, "configs": configs, "locations": table}
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["location"] + [f"{c}_kwh_per_kwp_year" for c in configs]
                       + [f"{c}_ratio" for c in configs])
            for loc_name in locations:
                row = table[loc_name]
                w.writerow([loc_name]
                           + [repr(row["specific_yield_kwh_per_kwp_year"][c]) for c in configs]
                           + [repr(row["ratio_to_reference"][c]) for c in configs])
    if args.json_output:
        with open(args.json_output, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    print(json.dumps(report, indent=2))
    return EXIT_OK


# ----------------------------- parser -----------------------------


def _add_location(p):
    p.add_argument("--location", default="raipur", help="preset: raipur, leh, palakkad")
    p.add_argument("--latitude", type=float)
    p.add_argument("--longitude", type=float)
    p.add_argument("--utc-offset", type=float, default=presets.IST)
    p.add_argument("--albedo", type=float, default=0.2)


def _add_module(p):
    p.add_argument("--module", default="vikram_mono_375", help="bundled module key")
    p.add_argument("--module-file", help="module spec JSON")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag values")
    common.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")

    parser = argparse.ArgumentParser(prog="vbpv", description="Vertical bifacial PV plant modelling")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("sunpath", parents=[common], help="export a sun-path table")
    _add_location(p)
    p.add_argument("--dates", help="comma-separated ISO dates")
    p.add_argument("--year", type=int, default=2023)
    p.add_argument("--full-year", action="store_true", help="every day of --year")
    p.add_argument("--step", type=float, default=15.0, help="minutes")
    p.add_argument("--output", default="sunpath.csv")
    p.set_defaults(func=cmd_sunpath)
    subs["sunpath"] = p

    p = sub.add_parser("simulate", parents=[common], help="simulate a day, window or year")
    _add_location(p)
    _add_module(p)
    p.add_argument("--label", default="EF81B", help="configuration label, e.g. EF81B")
    p.add_argument("--plant", choices=presets.PLANT_PRESETS, help="one-acre plant preset")
    p.add_argument("--tilt", type=float, help="custom tilt (uses --module)")
    p.add_argument("--azimuth", type=float, default=180.0)
    p.add_argument("--row-pitch", type=float)
    p.add_argument("--date", default="2023-03-20")
    p.add_argument("--start", help="window start HH:MM")
    p.add_argument("--end", help="window end HH:MM")
    p.add_argument("--full-year", action="store_true")
    p.add_argument("--year", type=int, default=2023)
    p.add_argument("--step", type=float, default=15.0)
    p.add_argument("--engine", choices=("simple", "diode"), default="simple")
    p.add_argument("--weather-file")
    p.add_argument("--ambient", type=float, default=25.0, help="clear-sky ambient temperature")
    p.add_argument("--output-dir", default="simulate_out")
    p.set_defaults(func=cmd_simulate)
    subs["simulate"] = p

    p = sub.add_parser("layout", parents=[common], help="pack modules onto a land parcel")
    _add_module(p)
    p.add_argument("--preset", choices=presets.PLANT_PRESETS)
    p.add_argument("--mode", choices=("conventional", "vertical"), default="conventional")
    p.add_argument("--acres", type=float, default=1.0)
    p.add_argument("--land-length", type=float)
    p.add_argument("--land-width", type=float)
    p.add_argument("--tilt", type=float)
    p.add_argument("--azimuth", type=float, default=180.0)
    p.add_argument("--inter-row", type=float, default=3.0)
    p.add_argument("--gap", type=float, default=presets.INTER_MODULE_GAP)
    p.add_argument("--structure-width", type=float, default=presets.STRUCTURE_WIDTH)
    p.add_argument("--strings-per-table", type=int, default=1)
    p.add_argument("--landscape", action="store_true", help="conventional rows in landscape")
    p.add_argument("--portrait", action="store_true", help="vertical rows in portrait")
    p.add_argument("--output", help="layout JSON path")
    p.set_defaults(func=cmd_layout)
    subs["layout"] = p

    p = sub.add_parser("sweep", parents=[common], help="grid sweep over tilt, azimuth and pitch")
    _add_location(p)
    _add_module(p)
    p.add_argument("--tilts", default="0:60:5")
    p.add_argument("--azimuths", default="180")
    p.add_argument("--pitches", default="6")
    p.add_argument("--objective", choices=OBJECTIVES, default="specific_yield")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5, help="energy weight")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--acres", type=float, default=1.0)
    p.add_argument("--year", type=int, default=2023)
    p.add_argument("--step", type=float, default=60.0)
    p.add_argument("--weather-file")
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--output-dir", default="sweep_out")
    p.set_defaults(func=cmd_sweep)
    subs["sweep"] = p

    p = sub.add_parser("compare", parents=[common], help="annual yield table across locations")
    p.add_argument("--locations", default="leh,raipur,palakkad")
    p.add_argument("--configs", default="conventional,vertical-sn,vertical-ew",
                   help="plant presets or configuration labels")
    p.add_argument("--reference", help="config the ratios are taken against")
    p.add_argument("--weather", choices=("clearsky", "file"), default="clearsky")
    p.add_argument("--weather-dir")
    p.add_argument("--year", type=int, default=2023)
    p.add_argument("--step", type=float, default=15.0)
    p.add_argument("--output", help="CSV path")
    p.add_argument("--json-output", help="JSON path")
    p.set_defaults(func=cmd_compare)
    subs["compare"] = p
    return parser, subs


def _apply_config(parser, subs, args, argv):
    path = args.config
    _require_file(path, "config")
    try:
        with open(path, encoding="utf-8") as fh:
            values = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"config: invalid JSON in {path}: {exc}") from None
    if not isinstance(values, dict):
        raise InputError("config: top level must be a JSON object")
    sp = subs[args.command]
    dests = {a.dest for a in sp._actions} - {"help", "config", "func"}
    defaults = {}
    for key, value in values.items():
        dest = "lam" if key == "lambda" else key.replace("-", "_")
        if dest not in dests:
            raise InputError(f"config: unknown key {key!r} for {args.command}")
        defaults[dest] = value
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _report(exc, code, as_json):
    if as_json:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
              file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    as_json = args.json_errors
    try:
        if args.config:
            args = _apply_config(parser, subs, args, argv)
        return args.func(args)
    except (InputError, FileNotFoundError, IsADirectoryError) as exc:
        return _report(exc, EXIT_INPUT, as_json)
    except (ComputationError, FloatingPointError) as exc:
        return _report(exc, EXIT_COMPUTE, as_json)


if __name__ == "__main__":
    sys.exit(main())
