import pytest

from fracparts.alpha import parse_alpha

GOLDEN = "quad:(1+1*sqrt(5))/2"
SQRT2 = "quad:(0+1*sqrt(2))/1"
SQRT2_3 = "quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1"
SQRT2_3_5 = "quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1,quad:(0+1*sqrt(5))/1"


@pytest.fixture(scope="session")
def golden():
    return parse_alpha(GOLDEN)


@pytest.fixture(scope="session")
def sqrt2():
    return parse_alpha(SQRT2)


@pytest.fixture(scope="session")
def sqrt23():
    return parse_alpha(SQRT2_3)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # lets fixtures see whether the test body passed
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
