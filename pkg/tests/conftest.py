import numpy as np
import pytest
from hypothesis import settings
from scipy import sparse

from eprcv.states import make_gaussian_tmsv, make_two_mode_squeezed_vacuum, vacuum_gaussian

settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def tmsv_fock():
    return make_two_mode_squeezed_vacuum(0.5, 30)


@pytest.fixture(scope="session")
def tmsv_gauss():
    return make_gaussian_tmsv(0.5)


@pytest.fixture(scope="session")
def vacuum():
    return vacuum_gaussian()


def fock_operator_moments(rho):
    """Brute-force oracle: means and symmetrized covariance from explicit quadrature matrices."""
    # one extra empty level per mode so truncated x^2 keeps the <a a^dag> term
    da, db = rho.dim_a + 1, rho.dim_b + 1
    t = np.zeros((da, db, da, db), dtype=complex)
    t[:-1, :-1, :-1, :-1] = rho.tensor
    mat = t.reshape(da * db, da * db)
    ops = []
    for dim, left in ((da, True), (db, False)):
        a = sparse.diags(np.sqrt(np.arange(1, dim)), 1, dtype=complex)
        x = a + a.conj().T
        p = -1j * (a - a.conj().T)
        for q in (x, p):
            ops.append(sparse.kron(q, sparse.eye(db)) if left else sparse.kron(sparse.eye(da), q))
    ops = [o.tocsr() for o in ops]

    def expect(op):
        return op.multiply(mat.T).sum().real

    mean = np.array([expect(o) for o in ops])
    cov = np.empty((4, 4))
    for i in range(4):
        for j in range(4):
            cov[i, j] = expect(0.5 * (ops[i] @ ops[j] + ops[j] @ ops[i])) - mean[i] * mean[j]
    return mean, cov


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    line = f"acceptance {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
