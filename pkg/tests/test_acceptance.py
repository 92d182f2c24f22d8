"""Acceptance suite: one test per criterion, each at its stated tolerance.

The whole suite is evaluated once (see ``conftest.acceptance``) and the
pass/fail line of every criterion is printed in the terminal summary.
"""
import numpy as np
import pytest

from bvlab import presets
from bvlab.coupling import run
from bvlab.diagnostics import energy_balance_residual
from bvlab.verify import Context, criterion_5

NUMBERS = list(range(1, 13))


@pytest.mark.parametrize("number", NUMBERS)
def test_criterion(acceptance, number):
    res = acceptance[number]
    print(res.line())
    assert res.passed, res.line()


def test_flipped_drag_breaks_energy_identity():
    cfg = presets.energy_identity(1.0 / 16)
    good = np.max(np.abs(energy_balance_residual(run(cfg))))
    bad = np.max(np.abs(energy_balance_residual(run(cfg.with_(drag_sign=-1.0)))))
    assert bad > 3 * good
    assert not criterion_5(Context(drag_sign=-1.0)).passed
