import pytest

from gridfreq.config_io import load_system, resolve_text
from gridfreq.model import Area, GeneratorFleet, Governor, GridModel, TieLine


def make_single_area(
    load_mw=900.0,
    rated_mw=1000.0,
    h=4.0,
    droop=0.05,
    kg=1.0,
    deadband_hz=0.0,
    damping=1.0,
    headroom_mw=None,
    tg=0.5,
    tt=7.0,
    initial_frequency=60.0,
):
    """One area, one governed synchronous fleet; the linear-oracle workhorse."""
    fleet = GeneratorFleet(
        id="g1",
        kind="synchronous",
        rated_mw=rated_mw,
        committed_mw=load_mw,
        inertia_h=h,
        gov=Governor(
            droop=droop,
            deadband_hz=deadband_hz,
            responsive_fraction=kg,
            headroom_mw=headroom_mw,
            tg_s=tg,
            tt_s=tt,
        ),
    )
    area = Area(id="a", load_mw=load_mw, load_damping=damping, fleets=(fleet,))
    return GridModel(name="single", areas=(area,), initial_frequency=initial_frequency)


def make_twin_areas(k_sync=800.0, load_mw=1000.0, h=4.0):
    """Two identical coupled areas for tie-symmetry checks."""
    def area(aid):
        fleet = GeneratorFleet(
            id=f"{aid}-g", kind="synchronous", rated_mw=1200.0, committed_mw=load_mw,
            inertia_h=h,
            gov=Governor(droop=0.05, deadband_hz=0.0, responsive_fraction=0.8, tg_s=0.5, tt_s=7.0),
        )
        return Area(id=aid, load_mw=load_mw, load_damping=1.0, fleets=(fleet,))

    return GridModel(
        name="twin",
        areas=(area("left"), area("right")),
        tie_lines=(TieLine("left", "right", k_sync),),
    )


@pytest.fixture(scope="session")
def ei_model():
    return load_system(*resolve_text("models", "ei-like"))


@pytest.fixture(scope="session")
def wecc_model():
    return load_system(*resolve_text("models", "wecc-like"))


@pytest.fixture(scope="session")
def ercot_model():
    return load_system(*resolve_text("models", "ercot-like"))


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    """Compile the integrator once so timed tests measure runs, not JIT."""
    from gridfreq.engine import Contingency, SimConfig, simulate

    simulate(make_single_area(), Contingency.none(), None, SimConfig(0.005, 1.0, 0.1))
