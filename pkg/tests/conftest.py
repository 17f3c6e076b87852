import os

import pytest

from app.core import settings
from app.core.constants import ANGSTROM
from app.schemas.frames import ScalingParams
from app.schemas.reaction import DiatomSpec, LepsSurface, MassTriple
from app.services.frames import mass_factors
from app.utils.config_parser import parse_config

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")

# 128 x 128 run around the corner of the F + H2 / 7Li surface; a few hundred
# steps finish in seconds
SMOKE_CONFIG = """
reaction.m_a = 3.15e-26 kg
reaction.m_b = 1.66e-27 kg
reaction.m_c = 1.66e-27 kg
reaction.delta = 0.164
reaction.ab.D = 9.609e-19 J
reaction.ab.beta = 2.242 1/angstrom
reaction.ab.q0 = 0.917 angstrom
reaction.bc.D = 7.608e-19 J
reaction.bc.beta = 1.942 1/angstrom
reaction.bc.q0 = 0.742 angstrom
reaction.ac.D = 9.609e-19 J
reaction.ac.beta = 2.242 1/angstrom
reaction.ac.q0 = 0.917 angstrom

simulator.m_tilde = 1.1526e-26 kg
simulator.l = 6.55e-6
simulator.temperature = 298 K

grid.Q1_min = 0 um
grid.Q1_max = 24 um
grid.Q2_min = -1.5 um
grid.Q2_max = 22.5 um
grid.n1 = 128
grid.n2 = 128

packet.channel = reactant
packet.center = 17 um
packet.width = 1 um
packet.velocity = thermal
packet.n = 0

cap.width = 4 um
cap.strength = 0.1 uK
cap.power = 3

schedule.dt = auto
schedule.n_steps = 500
schedule.stride = 100
schedule.flux_stride = 10

analysis.reactant_offset = 4 um
analysis.product_offset = 4 um
analysis.basis = harmonic
analysis.n_max = 3
"""


@pytest.fixture(autouse=True)
def isolate_logs(tmp_path, monkeypatch):
    """Keep log files of CLI runs out of the working tree."""
    monkeypatch.setattr(settings, "LOG_DIR", str(tmp_path / "logs"))


@pytest.fixture
def fh2_masses():
    return MassTriple(m_a=3.15e-26, m_b=1.66e-27, m_c=1.66e-27)


@pytest.fixture
def fh2_surface(fh2_masses):
    hf = dict(D=9.609e-19, beta_morse=2.242 / ANGSTROM, q0=0.917 * ANGSTROM)
    return LepsSurface(
        ab=DiatomSpec(mu=fh2_masses.mu_ab, **hf),
        bc=DiatomSpec(D=7.608e-19, beta_morse=1.942 / ANGSTROM, q0=0.742 * ANGSTROM, mu=fh2_masses.mu_bc),
        ac=DiatomSpec(mu=fh2_masses.mu_ac, **hf),
        delta=0.164,
    )


@pytest.fixture
def h3_surface():
    """H + H2 with identical pairs, symmetric under q1 <-> q2."""
    h2 = DiatomSpec(D=7.608e-19, beta_morse=1.942 / ANGSTROM, q0=0.742 * ANGSTROM, mu=8.3e-28)
    return LepsSurface(ab=h2, bc=h2, ac=h2, delta=0.1)


@pytest.fixture
def li_scaling():
    return ScalingParams(m_tilde=1.1526e-26, l=6.55e-6)


@pytest.fixture
def fh2_factors(fh2_masses):
    return mass_factors(fh2_masses)


@pytest.fixture
def smoke_config_text():
    return SMOKE_CONFIG


@pytest.fixture
def smoke_config():
    return parse_config(SMOKE_CONFIG, source="smoke.cfg")


@pytest.fixture
def smoke_config_path(tmp_path):
    path = tmp_path / "smoke.cfg"
    path.write_text(SMOKE_CONFIG, encoding="utf-8")
    return str(path)


@pytest.fixture
def bundled_config():
    def load(name):
        return os.path.join(CONFIG_DIR, name)
    return load
