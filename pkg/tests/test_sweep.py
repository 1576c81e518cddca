import json
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vbpv import presets
from vbpv.errors import InputError, SweepTooLargeError
from vbpv.plant_layout import LandParcel
from vbpv.simulation import clearsky_year
from vbpv.sweep import (
    SweepPoint,
    SweepSpec,
    brute_force_frontier,
    dominates,
    grid_sweep,
    layout_for,
    pareto_frontier,
    rank,
    rescore,
    sweep_frontier,
    write_frontier_json,
    write_sweep_csv,
)

ACRE = LandParcel.square_acres(1.0)


def frontier_indices(points):
    return sorted(fp.config for fp in pareto_frontier([(e, f, i) for i, (e, f) in enumerate(points)]))


class TestSweepSpec:
    @pytest.mark.parametrize("kwargs", [
        {"tilt_range": ()},
        {"objective": "profit"},
        {"lam": 1.5},
        {"pitch_range": (0.0,)},
        {"weather_source": "file"},
        {"weather_source": "satellite"},
    ])
    def test_invalid(self, kwargs):
        base = {"tilt_range": (20,), "azimuth_range": (180,), "pitch_range": (5,)}
        base.update(kwargs)
        with pytest.raises(InputError):
            SweepSpec(**base)

    def test_grid(self):
        spec = SweepSpec((30, 10, 20), (180, 90), (5,))
        assert spec.size == 6
        assert spec.grid()[0] == (10.0, 90.0, 5.0)


class TestFrontier:
    def test_empty(self):
        assert pareto_frontier([]) == []

    def test_single(self):
        (fp,) = pareto_frontier([(5.0, 0.5, "a")])
        assert fp.config == "a" and not fp.dominated

    def test_dominated_pair(self):
        assert [fp.config for fp in pareto_frontier([(5.0, 0.5, "a"), (4.0, 0.4, "b")])] == ["a"]

    def test_sorted_by_energy(self):
        pts = [(1.0, 0.9, "v"), (3.0, 0.3, "c"), (2.0, 0.6, "m")]
        assert [fp.config for fp in pareto_frontier(pts)] == ["c", "m", "v"]

    def test_non_finite(self):
        with pytest.raises(InputError):
            pareto_frontier([(float("nan"), 0.5, "a")])

    def test_dominates(self):
        assert dominates((2, 1), (1, 1))
        assert not dominates((1, 1), (1, 1))
        assert not dominates((2, 0), (1, 1))

    def test_thousand_random_points(self):
        rng = random.Random(7)
        pts = [(rng.uniform(0, 1e6), rng.uniform(0, 1)) for _ in range(1000)]
        assert frontier_indices(pts) == brute_force_frontier(pts)

    def test_thousand_points_with_ties(self):
        rng = random.Random(11)
        pts = [(float(rng.randint(0, 30)), rng.randint(0, 30) / 30) for _ in range(1000)]
        assert frontier_indices(pts) == brute_force_frontier(pts)

    @given(st.lists(st.tuples(st.integers(0, 20).map(float), st.integers(0, 20).map(float)), max_size=60))
    def test_matches_brute_force(self, pts):
        assert frontier_indices(pts) == brute_force_frontier(pts)

    @given(st.lists(st.tuples(st.floats(0, 1e6), st.floats(0, 1)), min_size=1, max_size=80))
    def test_no_member_dominated(self, pts):
        front = pareto_frontier([(e, f, i) for i, (e, f) in enumerate(pts)])
        for a in front:
            assert not any(dominates(p, (a.annual_energy, a.farmable_fraction)) for p in pts)


def synthetic(points):
    return [SweepPoint(float(t), 180.0, 5.0, True, annual_energy_kwh=e, farmable_fraction=f,
                       specific_yield=e / 100, energy_per_acre=e)
            for t, (e, f) in enumerate(points)]


class TestRanking:
    def test_ties_lexicographic(self):
        pts = [SweepPoint(t, a, 5.0, True, objective=1.0) for t, a in [(20, 180), (10, 270), (10, 90)]]
        assert [p.key[:2] for p in rank(pts)] == [(10, 90), (10, 270), (20, 180)]

    def test_infeasible_dropped(self):
        pts = [SweepPoint(10, 180, 1, False), SweepPoint(20, 180, 5, True, objective=0.0)]
        assert [p.tilt for p in rank(pts)] == [20]

    @given(st.lists(st.tuples(st.floats(1, 1e6), st.floats(0, 0.99)), min_size=1, max_size=40),
           st.floats(0, 1), st.floats(0, 1))
    def test_lambda_monotone(self, raw, l1, l2):
        lo, hi = sorted((l1, l2))
        pts = synthetic(raw)
        top_lo = rescore(pts, "weighted", lo)[0]
        top_hi = rescore(pts, "weighted", hi)[0]
        assert top_hi.annual_energy_kwh >= top_lo.annual_energy_kwh

    def test_rescore_objectives(self):
        pts = synthetic([(100.0, 0.2), (50.0, 0.9)])
        assert rescore(pts, "weighted", 1.0)[0].annual_energy_kwh == 100.0
        assert rescore(pts, "weighted", 0.0)[0].farmable_fraction == 0.9
        with pytest.raises(InputError):
            rescore(pts, "weighted", 2.0)


class TestLayoutFor:
    def test_pitch_shorter_than_row(self, mono):
        assert layout_for(ACRE, mono, 20.0, 180.0, 1.0) is None

    def test_vertical_threshold(self, bifacial):
        layout = layout_for(ACRE, bifacial, 81.0, 180.0, 3.3)
        assert layout.total_modules == 620


class TestGridSweep:
    def test_cap(self, mono, raipur):
        spec = SweepSpec(tuple(range(0, 90)), tuple(range(90, 271, 10)), (4.0, 5.0, 6.0, 7.0, 8.0, 9.0))
        with pytest.raises(SweepTooLargeError) as exc:
            grid_sweep(spec, ACRE, mono, raipur)
        assert exc.value.size == spec.size
        assert "10000" in str(exc.value)

    def test_single_point(self, mono, raipur):
        ranked, scored = grid_sweep(SweepSpec((20,), (180,), (4.0,)), ACRE, mono, raipur)
        assert len(ranked) == 1 and ranked[0].key == (20.0, 180.0, 4.0)
        assert ranked[0].capacity_kwp > 0

    def test_tilt_optimum_near_latitude(self, mono, raipur):
        spec = SweepSpec(tuple(range(0, 46, 3)), (180,), (8.0,))
        ranked, _ = grid_sweep(spec, ACRE, mono, raipur)
        assert abs(ranked[0].tilt - raipur.latitude) <= 8

    def test_south_beats_east(self, mono, raipur):
        ranked, _ = grid_sweep(SweepSpec((21,), (90, 180), (8.0,)), ACRE, mono, raipur)
        assert ranked[0].azimuth == 180.0

    def test_deterministic_bytes(self, mono, raipur, tmp_path):
        spec = SweepSpec((10, 20, 30, 80), (180, 90), (3.3, 6.0), objective="weighted")
        outputs = []
        for k, workers in enumerate((1, 1, 2)):
            ranked, scored = grid_sweep(spec, ACRE, mono, raipur, workers=workers)
            write_sweep_csv(scored, tmp_path / f"s{k}.csv")
            write_frontier_json(sweep_frontier(scored), tmp_path / f"f{k}.json")
            outputs.append(((tmp_path / f"s{k}.csv").read_bytes(), (tmp_path / f"f{k}.json").read_bytes()))
        assert outputs[0] == outputs[1] == outputs[2]
        frontier = json.loads(outputs[0][1])["frontier"]
        energies = [row["annual_energy_kwh"] for row in frontier]
        assert energies == sorted(energies, reverse=True)

    def test_conventional_and_vertical_on_frontier(self, mono, raipur):
        spec = SweepSpec((23, 81), (180,), (presets.plant_layout("conventional").row_pitch, 3.3))
        _, scored = grid_sweep(spec, ACRE, mono, raipur)
        keys = {(fp.config.tilt, round(fp.config.pitch, 3)) for fp in sweep_frontier(scored)}
        assert (23.0, round(presets.plant_layout("conventional").row_pitch, 3)) in keys
        assert (81.0, 3.3) in keys


def test_preset_plants_on_frontier(raipur):
    results = {name: clearsky_year(presets.plant(name, site=raipur), raipur, step_minutes=60)
               for name in ("conventional", "vertical-sn")}
    pts = [(results[n].energy_kwh, presets.plant(n, site=raipur).layout.farmable_fraction, n) for n in results]
    names = [fp.config for fp in pareto_frontier(pts)]
    assert names == ["conventional", "vertical-sn"]
    assert np.isfinite([p[0] for p in pts]).all()
