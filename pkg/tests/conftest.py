import numpy as np
import pytest

from gsacluster import (Deployment, GatewayNode, Position, RadioParams,
                        SensorNode)


def line_deployment(energies, spacing=50.0, gateways=(), field_side=1000.0,
                    bs=None, gw_energy=5.0):
    """Sensors on the x axis at `spacing` intervals plus optional gateways.

    `gateways` is a sequence of (x, y) positions; ids continue after the
    sensors.
    """
    sensors = [SensorNode(i, Position(i * spacing, 0.0), e)
               for i, e in enumerate(energies)]
    gws = [GatewayNode(len(sensors) + j, Position(x, y), gw_energy)
           for j, (x, y) in enumerate(gateways)]
    bs_pos = Position(*bs) if bs else Position(field_side / 2, field_side / 2)
    return Deployment(sensors, gws, bs_pos, field_side, seed=0)


@pytest.fixture
def radio():
    return RadioParams()


@pytest.fixture
def rng():
    return np.random.default_rng(0)
