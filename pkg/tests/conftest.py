import numpy as np
import pytest

import evidact._kernels_np as kernels_np

try:
    import evidact._kernels_cy as kernels_cy
except ImportError:
    kernels_cy = None

KERNEL_MODULES = [pytest.param(kernels_np, id="numpy")]
if kernels_cy is not None:
    KERNEL_MODULES.append(pytest.param(kernels_cy, id="cython"))


@pytest.fixture(params=KERNEL_MODULES)
def kernels(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(0)
