import sys

import numpy as np
import pytest

from consensus_lab.graph import five_agent_graph, laplacian
from consensus_lab.spectral import eigendecompose

# Five-agent example spectrum in closed form; the oracle suite re-derives it with mpmath.
FIVE_AGENT_EIGENVALUES = (0.0, 3.0 - np.sqrt(2.0), 3.0, 3.0 + np.sqrt(2.0), 5.0)

# Largest characteristic-root modulus on the five-agent graph for d = 0..d_bar,
# computed with mpmath.polyroots at 40 digits.
ORACLE_R_D = {
    0.125: (0.960355339059327, 0.958645112324690, 0.956684072218688, 0.954396497730438,
            0.951666872119615, 0.948305660056011, 0.943967008018633, 0.952790110680017,
            0.968129030775969, 0.979444985856500, 0.987994948668608, 0.994581227744160,
            0.999735855389207),
    0.5: (0.841421356237310, 0.802359647170897, 0.940556312572148),
    1.0: (0.682842712474619,),
    1.5: (0.524264068711929,),
}

INPUTS = (1.0, 2.0, 3.0, 4.0, 5.0)


@pytest.fixture(scope="session")
def g5():
    return five_agent_graph()


@pytest.fixture(scope="session")
def spec5(g5):
    return eigendecompose(laplacian(g5))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.summary_lines():
            terminalreporter.write_line(line)
