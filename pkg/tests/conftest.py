import numpy as np
import pytest
from hypothesis import settings

from relaxlab.models import Cde1dSpec, build_cde1d

settings.register_profile("relaxlab", max_examples=40, deadline=None)
settings.load_profile("relaxlab")


def cde1d(f=None, df=None, b=None, db=None, u_range=(0.1, 2.0)):
    """cde1d with defaults f = 0, b = u."""
    zero = lambda u: 0 * np.asarray(u, float)
    return build_cde1d(Cde1dSpec(
        f=f or zero, df=df or zero,
        b=b or (lambda u: np.asarray(u, float)), db=db or (lambda u: 1 + 0 * np.asarray(u, float)),
        u_range=u_range))


@pytest.fixture
def heat_cde1d():
    return cde1d()
