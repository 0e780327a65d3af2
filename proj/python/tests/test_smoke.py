import math
from pathlib import Path

import numpy as np
import pytest

import ncsym

ROOT = Path(__file__).resolve().parents[2]
CONFIGS = ROOT / "configs"
DATA = ROOT / "tests" / "data"


def test_full_scale_hold_ranges():
    a = ncsym.timing_from_config(str(CONFIGS / "full_a.ini"))
    b = ncsym.timing_from_config(str(CONFIGS / "full_b.ini"))
    assert (a.n_min, a.n_max) == (1, 3)
    assert (b.n_min, b.n_max) == (2, 4)
    assert a.state_bits == 27


def test_timing_from_parameters():
    p = ncsym.NcsParameters()
    p.tau, p.mu_x, p.mu_u = 1.0, 0.25, 0.25
    p.delay_max = 0.6
    t = ncsym.derive_timing(p, ncsym.make_plant("integrator"))
    assert t.state_points == 9
    assert (t.n_min, t.n_max) == (1, 2)


def test_gamma():
    assert ncsym.gamma_from_config(str(CONFIGS / "full_a.ini")) == pytest.approx(2 * math.pi / 3)


def test_plant_flow_closed_form():
    p = ncsym.make_plant("scalar_stable")
    x = p.flow(np.array([1.0]), np.array([0.0]), 1.0, 256)
    assert x[0] == pytest.approx(math.exp(-1.0), abs=1e-9)
    assert p.eval(np.array([0.5]), np.array([0.5]))[0] == 0.0


def two_state(values):
    s = ncsym.TransitionSystem()
    for i, v in enumerate(values):
        s.add_state([np.array([v])], f"s{i}")
    s.add_input("u")
    s.add_initial(0)
    s.add_transition(0, 0, 1)
    s.add_transition(1, 0, 1)
    s.finalize()
    return s


def test_relation_checkers():
    a, b = two_state([0.0, 1.0]), two_state([0.125, 1.125])
    assert ncsym.check_alt_bisim(a, b, 0.125) == [(0, 0), (1, 1)]
    assert ncsym.check_approx_sim(a, b, 0.05) is None


def test_synthesis_and_simulation():
    cfg = str(DATA / "scalar.ini")
    c = ncsym.synthesize_config(cfg)
    assert c["realizable"]
    assert "policy" in c["text"]
    r = ncsym.simulate_config(cfg, seed=4)
    loop = r["loops"][0]
    assert not loop["domain_miss"]
    assert loop["tracking_pass"]
    assert all(c["n_min"] <= n <= c["n_max"] for n in loop["n_sequence"])
    again = ncsym.simulate_config(cfg, seed=4)
    assert np.array_equal(np.array(loop["samples"]), np.array(again["loops"][0]["samples"]))


def test_errors():
    with pytest.raises(ncsym.ConfigError):
        ncsym.timing_from_config(str(DATA / "malformed.ini"))
    with pytest.raises(ncsym.InfeasibleScenario):
        ncsym.simulate_config(str(DATA / "contention_pair.ini"))


def test_tracking_measure():
    ok, dev, align = ncsym.measure_tracking([np.array([0.1]), np.array([1.1])], [np.array([0.0]), np.array([1.0])], 0.2)
    assert ok and dev == pytest.approx(0.1) and align == [0, 1]
