import math
import os
from pathlib import Path

import pytest

import medloc

ROOT = Path(os.environ.get("MEDLOC_SOURCE_DIR", Path(__file__).resolve().parents[2]))
ORIGIN = (41.15, -8.61)


def north(km):
    # one degree of latitude on the 6371 km sphere
    return ORIGIN[0] + km / (6371.0 * math.pi / 180.0), ORIGIN[1]


def registry(*placed):
    reg = medloc.Registry()
    for pid, km in placed:
        lat, lon = north(km)
        reg.register(pid, lat, lon)
    return reg


def test_haversine_matches_law_of_cosines():
    lat, lon = north(3.0)
    assert medloc.haversine_km(*ORIGIN, lat, lon) == pytest.approx(3.0, abs=1e-9)
    assert medloc.haversine_km(*ORIGIN, *ORIGIN) == 0.0
    with pytest.raises(medloc.ValidationError):
        medloc.haversine_km(91.0, 0.0, 0.0, 0.0)


def test_classify():
    assert medloc.classify({"A", "B"}, {"A", "B"}) == "full"
    assert medloc.classify({"A", "B"}, {"B"}) == "partial"
    assert medloc.classify({"A"}, set()) == "none"


def test_registry_queries():
    reg = registry(("P2", 2.0), ("P1", 1.0), ("P9", 9.0))
    assert len(reg) == 3
    assert [p for p, _ in reg.within_radius(*ORIGIN, 5.0)] == ["P1", "P2"]
    assert [p for p, _ in reg.nearest(*ORIGIN, 1)] == ["P1"]


def test_catalog_autocomplete():
    cat = medloc.Catalog([{"id": "G", "name": "Ácido acetilsalicílico"}, {"id": "A", "name": "Amoxicilina"}])
    # case folds, accents do not
    assert [m["id"] for m in cat.autocomplete("ÁCI")] == ["G"]
    assert cat.autocomplete("aci") == []
    assert len(cat) == 2
    shipped = medloc.Catalog.load(str(ROOT / "data/world/medicines.txt"))
    assert len(shipped) == 20


def test_engine_round_trip():
    reg = registry(("P1", 1.0), ("P2", 2.0), ("P7", 7.0))
    t = medloc.open_request("r1", ["A", "B"], *ORIGIN, reg)
    r = t.request
    assert r.state == "open" and r.round == 1 and r.radius_km == 5.0
    assert t.dispatched == ["P1", "P2"]

    t2 = medloc.record_response(r, "P1", set(), reg, 60)
    assert t2.request.state == "open"
    assert t2.request.best() is None

    t3 = medloc.tick(t2.request, reg, 600)
    assert t3.request.round == 2 and t3.request.enquired == ["P1", "P2", "P7"]

    t4 = medloc.record_response(t3.request, "P7", {"A", "B"}, reg, 700)
    assert t4.request.state == "fulfilled_full"
    assert t4.request.best() == ("P7", "full", pytest.approx(7.0))
    assert t4.request.to_dict()["state"] == "fulfilled_full"

    events = t.events + t2.events + t3.events + t4.events
    assert medloc.replay(events) == t4.request
    with pytest.raises(medloc.InvalidTransition):
        medloc.cancel(t4.request, 800)
    with pytest.raises(medloc.NotFoundError):
        medloc.record_response(r, "P9", set(), reg, 60)


def test_published_chi_square():
    x, p = medloc.chi_square(19, 32, 31, 18)
    assert f"{x:.3f}" == "6.763" and f"{p:.3f}" == "0.009"
    assert medloc.chi_square_sf(3.841, 1) == pytest.approx(0.05, abs=5e-5)
    with pytest.raises(medloc.DomainError):
        medloc.chi_square(0, 0, 3, 4)


def test_tabulate_and_describe():
    rows = medloc.tabulate([("No", 171), ("Yes", 100)])
    assert [r[2] for r in rows] == ["63.1", "36.9"]
    assert [r[2] for r in medloc.tabulate([("A", 42), ("B", 34)], 54)] == ["77.8", "63.0"]
    d = medloc.describe([1, 2, 3, 4])
    assert d["mean"] == 2.5 and d["n"] == 4


def test_stats_report():
    report = medloc.stats_report(str(ROOT / "data/stats/chi_square_tables.yaml"))
    assert "6.763" in report and "DIFFERS" not in report


def test_scenario_run():
    res = medloc.run_scenario(str(ROOT / "scenarios/silent_round.yaml"))
    assert res["passed"], res
    assert res["failed"] == 0 and res["assertions"] > 0
    again = medloc.run_scenario(str(ROOT / "scenarios/silent_round.yaml"))
    assert again["transcript"] == res["transcript"]
