import pytest


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the integration kernels once up front so individual
    # tests measure algorithm time, not JIT time
    from cabledyn import _kernels

    _kernels.warmup()
