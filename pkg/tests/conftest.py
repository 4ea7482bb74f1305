import numpy as np
import pytest

from actm import PLA, BeamDesign, CrankGeometry, CrossSection, PositiveSpring, SynthesisConfig

W = 0.012
R = 0.008
BOX = (0.030, 0.012)


@pytest.fixture
def geom():
    return CrankGeometry(W, R)


@pytest.fixture
def paper_config(geom):
    return SynthesisConfig(geom, PositiveSpring.from_mNm_per_deg(0.3))


@pytest.fixture
def arch_design():
    span = 0.0144222
    x0 = 0.5 * (BOX[0] - span)
    t = np.linspace(0.0, 1.0, 5)
    points = np.column_stack([x0 + span * t, 0.002 * np.sin(np.pi * t)])
    return BeamDesign(points, CrossSection(0.002, 0.002), PLA, BOX)
