import numpy as np
import pytest

from pvprof import ArrayTopology, SdmParamsRef, synthesize_datasheet

# canonical 72-cell c-Si module used throughout the suite
CSI_PARAMS = SdmParamsRef(i_ph_ref=9.5, i_0_ref=3e-10, r_s=0.35,
                          r_sh_ref=400.0, n_diode=1.1)
CELLS = 72
ALPHA_ISC = 0.004


@pytest.fixture(scope="session")
def csi_params():
    return CSI_PARAMS


@pytest.fixture(scope="session")
def topo():
    return ArrayTopology(cells_in_series=CELLS, modules_per_string=12,
                         strings_in_parallel=8)


@pytest.fixture(scope="session")
def datasheet():
    return synthesize_datasheet(CSI_PARAMS, CELLS, alpha_isc=ALPHA_ISC)


@pytest.fixture(scope="session")
def p_nominal(datasheet, topo):
    return (datasheet.v_mp * topo.modules_per_string
            * datasheet.i_mp * topo.strings_in_parallel)


def draw_csi_like(rng, n):
    """Random parameter sets across the healthy-to-degraded c-Si range."""
    return [SdmParamsRef(rng.uniform(5.0, 12.0),
                         10.0 ** rng.uniform(-11.0, -9.0),
                         rng.uniform(0.1, 0.8),
                         10.0 ** rng.uniform(np.log10(100.0), np.log10(5000.0)),
                         rng.uniform(0.9, 1.4))
            for _ in range(n)]
