import itertools

import pytest

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 101]


def leibniz_det(rows, p):
    """Determinant by permutation expansion (independent of elimination)."""
    k = len(rows)
    total = 0
    for perm in itertools.permutations(range(k)):
        inv = sum(1 for i in range(k) for j in range(i + 1, k) if perm[i] > perm[j])
        term = -1 if inv % 2 else 1
        for i in range(k):
            term *= rows[i][perm[i]]
        total += term
    return total % p


def trial_division_prime(n):
    if n < 2:
        return False
    return all(n % q for q in range(2, int(n**0.5) + 1))


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(ACCEPTANCE, None)
    if not log:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(log):
        terminalreporter.write_line(log[k])
