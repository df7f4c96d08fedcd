import pytest

from bdspaces.ah import AHParams, NetSpec, build_ah_space
from bdspaces.linalg import Q
from bdspaces.original import OrigParams, build_original
from bdspaces.shift import build_r2

TOY_M = (4, 5, 6, 17, 18, 19, 20, 21)
TOY_N = (2, 3, 4, 5, 6, 7, 8, 9)
TOY_NET = NetSpec(denominator_bound=2, support_cap=2, mode="sampled", seed=0, count=4)

ACCEPTANCE_LINES: dict = {}


def toy_params(kind, max_rank=6, net=TOY_NET, **kw):
    return AHParams(kind, TOY_M, TOY_N, True, max_rank, net, **kw)


@pytest.fixture(scope="session")
def r2_12():
    return build_r2(12)


@pytest.fixture(scope="session")
def orig_params():
    return OrigParams(Q(1), Q("1/3")), OrigParams(Q("3/4"), Q("2/5"))


@pytest.fixture(scope="session")
def orig_5(orig_params):
    return [build_original(p, 5) for p in orig_params]


@pytest.fixture(scope="session")
def orig_6(orig_params):
    return build_original(orig_params[0], 6)


@pytest.fixture(scope="session")
def x3():
    return build_ah_space(toy_params(3))


@pytest.fixture(scope="session")
def x2():
    return build_ah_space(toy_params(2))


@pytest.fixture(scope="session")
def xinf():
    return build_ah_space(toy_params("inf"))


@pytest.fixture(scope="session")
def x3_small():
    return build_ah_space(toy_params(3, max_rank=4))


@pytest.fixture
def acceptance_line(request):
    """Record the one-line verdict printed for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str = ""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
        ACCEPTANCE_LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
