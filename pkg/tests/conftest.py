import json
from pathlib import Path

import pytest

from gcrs.scenario import parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def scenario_dir():
    return SCENARIOS


def scenario_doc(name):
    return json.loads((SCENARIOS / name).read_text())


def diurnal(start, duration, daily=True):
    return {"kind": "diurnal",
            "window": {"start_local_minutes": start, "duration_minutes": duration, "repeats_daily": daily}}


def markov(p_off, p_on, initial="occupied"):
    return {"kind": "markov", "p_on_to_off": p_off, "p_off_to_on": p_on, "initial": initial}


def minimal_doc(**overrides):
    doc = {
        "duration_ticks": 10,
        "regions": [{"id": "r", "utc_offset_minutes": 0}],
        "networks": [{"id": "n", "region": "r",
                      "bands": [{"low_hz": 100, "high_hz": 200, "model": diurnal(0, 60)}]}],
    }
    doc.update(overrides)
    return doc


def build(doc):
    return parse_scenario(doc)


def random_scenario(rng, duration=None):
    """A seeded random scenario: up to 5 networks and 8 bands, mixed occupancy models.

    Bands are drawn from a small frequency grid so that different lessors
    often share frequencies and leases compete for the same spectrum.
    """
    n_nets = rng.randint(2, 5)
    n_bands = rng.randint(n_nets, 8)
    owners = list(range(n_nets)) + [rng.randrange(n_nets) for _ in range(n_bands - n_nets)]
    regions = [{"id": f"r{k}", "utc_offset_minutes": rng.choice([-720, -300, 0, 60, 330, 480, 720, 840])}
               for k in range(rng.randint(1, n_nets))]
    networks, links = [], []
    for k in range(n_nets):
        slots = sorted(rng.sample(range(8), owners.count(k)))
        bands = []
        for s in slots:
            if rng.random() < 0.5:
                model = diurnal(rng.randrange(1440), rng.randint(1, 1440), rng.random() < 0.8)
            else:
                model = markov(round(rng.uniform(0, 0.3), 3), round(rng.uniform(0, 0.3), 3),
                               rng.choice(["occupied", "idle"]))
            bands.append({"low_hz": 1000 * s, "high_hz": 1000 * s + rng.choice([500, 1000]), "model": model})
        net = {"id": f"n{k}", "region": rng.choice(regions)["id"], "bands": bands,
               "sensing_interval": rng.randint(1, 4)}
        if rng.random() < 0.7:
            net["demand"] = {"width_hz": rng.choice([200, 500, 1000]), "min_duration_ticks": rng.randint(1, 20),
                             "lease_duration_ticks": rng.randint(5, 80),
                             "mode": rng.choice(["dynamic", "opportunistic"])}
        if rng.random() < 0.2:
            net["permissions"] = {"mode": "allow-list",
                                  "allowed": sorted({f"n{rng.randrange(n_nets)}" for _ in range(2)})}
        if rng.random() < 0.2:
            start = rng.randint(0, 50)
            net["availability"] = {"from": start, "until": start + rng.randint(1, 300)}
        networks.append(net)
        if rng.random() < 0.9:
            links.append({"id": f"g{k}", "a": f"n{k}", "b": "crfc", "delta_ticks": rng.randint(0, 4)})
    duration = duration or rng.randint(100, 240)
    actions = []
    for _ in range(rng.randint(0, 4)):
        net = rng.choice(networks)
        b = rng.choice(net["bands"])
        actions.append({"at": rng.randrange(duration), "action": "primary-return", "network": net["id"],
                        "band": {"low_hz": b["low_hz"], "high_hz": b["high_hz"]},
                        "hold_ticks": rng.randint(0, 30)})
    return {"duration_ticks": duration, "global_seed": rng.randrange(2 ** 32), "regions": regions,
            "networks": networks, "links": links, "scripted_actions": actions}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
