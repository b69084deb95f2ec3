"""Two-mode state representations and constructors.

Quadrature convention throughout the package::

    x = a + a^dag,    p = -i (a - a^dag),    x_theta = a e^{-i theta} + a^dag e^{i theta}

so the vacuum has unit quadrature variance, ``[x, p] = 2i`` and the
uncertainty constants default to ``C = D = 1``. Moment vectors are ordered
``(x_A, p_A, x_B, p_B)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import expm

from .errors import InvalidStateError, TruncationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
WEIGHT_TOL = 1e-12
WEIGHT_DROP = 1e-14

OMEGA_1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA = np.kron(np.eye(2), OMEGA_1)


def _frozen(arr):
    arr = np.array(arr)
    arr.flags.writeable = False
    return arr


def annihilation(dim):
    """Truncated annihilation operator on ``dim`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def _check_density(mat, label=""):
    herm = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
    if herm > HERMITIAN_TOL:
        raise InvalidStateError("hermitian", f"{label}deviation {herm:.3e} > {HERMITIAN_TOL:g}")
    tr = np.trace(mat).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError("trace", f"{label}trace {tr:.12g} differs from 1")
    try:
        # a Cholesky factor of rho + tol*I exists iff no eigenvalue lies below -tol
        np.linalg.cholesky(mat + PSD_TOL * np.eye(mat.shape[0]))
    except np.linalg.LinAlgError:
        lam = np.linalg.eigvalsh(mat).min()
        raise InvalidStateError("positivity", f"{label}smallest eigenvalue {lam:.3e}")


def _check_covariance(mean, cov, n_modes, label=""):
    size = 2 * n_modes
    if mean.shape != (size,):
        raise InvalidStateError("shape", f"{label}mean must have {size} entries, got {mean.shape}")
    if cov.shape != (size, size):
        raise InvalidStateError("shape", f"{label}cov must be {size}x{size}, got {cov.shape}")
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise InvalidStateError("finite", f"{label}non-finite moments")
    asym = np.max(np.abs(cov - cov.T))
    if asym > 1e-12:
        raise InvalidStateError("symmetry", f"{label}cov asymmetry {asym:.3e}")
    omega = np.kron(np.eye(n_modes), OMEGA_1)
    lam = np.linalg.eigvalsh(cov + 1j * omega).min()
    if lam < -1e-9 * max(1.0, np.abs(cov).max()):
        raise InvalidStateError(
            "uncertainty", f"{label}cov + i*Omega has eigenvalue {lam:.3e} < 0"
        )


@dataclass(frozen=True)
class UncertaintyBounds:
    """Uncertainty constants: ``dx dp >= c_bound`` at A, ``dy dq >= d_bound`` at B."""

    c_bound: float = 1.0
    d_bound: float = 1.0

    def __post_init__(self):
        if not (self.c_bound > 0 and self.d_bound > 0):
            raise ValueError("uncertainty bounds must be strictly positive")


@dataclass(frozen=True)
class FockDensityMatrix:
    """Truncated two-mode density operator.

    ``entries`` is indexed by the composite index ``n_a * dim_b + m_b``.
    """

    dim_a: int
    dim_b: int
    entries: np.ndarray

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise InvalidStateError("shape", "Fock dimensions must be positive")
        mat = np.asarray(self.entries, dtype=complex)
        n = self.dim_a * self.dim_b
        if mat.shape != (n, n):
            raise InvalidStateError("shape", f"entries must be {n}x{n}, got {mat.shape}")
        _check_density(mat)
        object.__setattr__(self, "entries", _frozen(mat))

    def spectrum(self):
        """Cached ``(eigenvalues, eigenvectors)`` of the density matrix."""
        cached = self.__dict__.get("_spectrum")
        if cached is None:
            cached = np.linalg.eigh(self.entries)
            object.__setattr__(self, "_spectrum", cached)
        return cached

    def low_rank_factors(self, max_rank=4, tol=1e-12):
        """``(weights, vectors)`` with ``rho = V diag(w) V^dag`` if rank <= ``max_rank``, else None.

        Uses a seeded randomized range finder, so it costs O(N^2) instead of a
        full eigendecomposition; the reconstruction is verified to ``tol``.
        """
        if "_low_rank" in self.__dict__:
            return self.__dict__["_low_rank"]
        mat = np.asarray(self.entries)
        n = mat.shape[0]
        k = min(n, max_rank + 4)
        rng = np.random.default_rng(0)
        probe = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        q, _ = np.linalg.qr(mat @ probe)
        evals, evecs = np.linalg.eigh(q.conj().T @ mat @ q)
        keep = evals > 1e-13
        result = None
        if keep.sum() <= max_rank:
            vecs = q @ evecs[:, keep]
            approx = (vecs * evals[keep]) @ vecs.conj().T
            if np.abs(mat - approx).max() <= tol:
                result = (evals[keep], vecs)
        object.__setattr__(self, "_low_rank", result)
        return result

    @property
    def tensor(self):
        """View as a rank-4 tensor ``rho[n, m, n', m']``."""
        return self.entries.reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)


@dataclass(frozen=True)
class GaussianState:
    """Two-mode Gaussian state: mean ``(x_A, p_A, x_B, p_B)`` and symmetrized covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        _check_covariance(mean, cov, 2)
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))


@dataclass(frozen=True)
class SingleModeFock:
    """Single-mode truncated density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise InvalidStateError("shape", f"single-mode matrix must be square, got {mat.shape}")
        _check_density(mat)
        object.__setattr__(self, "matrix", _frozen(mat))

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SingleModeGaussian:
    """Single-mode Gaussian moments: mean ``(x, p)`` and 2x2 covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        _check_covariance(mean, cov, 1)
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))


LocalState = Union[SingleModeFock, SingleModeGaussian]


@dataclass(frozen=True)
class MixtureTerm:
    weight: float
    state_a: LocalState
    state_b: LocalState


@dataclass(frozen=True)
class SeparableMixture:
    """Explicit separable decomposition ``sum_r P_r rho_r^A (x) rho_r^B``.

    Terms with weight below 1e-14 are dropped and the rest renormalized.
    """

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise InvalidStateError("weights", "mixture needs at least one term")
        for t in terms:
            if not np.isfinite(t.weight) or t.weight < 0 or t.weight > 1 + WEIGHT_TOL:
                raise InvalidStateError("weights", f"weight {t.weight!r} outside [0, 1]")
            for local in (t.state_a, t.state_b):
                if not isinstance(local, (SingleModeFock, SingleModeGaussian)):
                    raise InvalidStateError("local_state", f"unsupported local state {type(local).__name__}")
        total = sum(t.weight for t in terms)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidStateError("weights", f"weights sum to {total:.15g}, not 1")
        kept = [t for t in terms if t.weight >= WEIGHT_DROP]
        if len(kept) != len(terms):
            norm = sum(t.weight for t in kept)
            kept = [MixtureTerm(t.weight / norm, t.state_a, t.state_b) for t in kept]
        object.__setattr__(self, "terms", tuple(kept))

    @classmethod
    def from_weights(cls, weights, states_a, states_b):
        """Build a mixture, normalizing ``weights`` to sum to one."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise InvalidStateError("weights", "weights must be nonnegative with positive sum")
        w = w / w.sum()
        return cls(tuple(MixtureTerm(float(p), sa, sb) for p, sa, sb in zip(w, states_a, states_b)))

    @property
    def weights(self):
        return np.array([t.weight for t in self.terms])

    def merge(self, other, w):
        """Convex combination ``w * self + (1 - w) * other`` as a new mixture."""
        terms = [MixtureTerm(w * t.weight, t.state_a, t.state_b) for t in self.terms]
        terms += [MixtureTerm((1 - w) * t.weight, t.state_a, t.state_b) for t in other.terms]
        total = sum(t.weight for t in terms)
        return SeparableMixture(tuple(MixtureTerm(t.weight / total, t.state_a, t.state_b) for t in terms))


TwoModeState = Union[FockDensityMatrix, GaussianState, SeparableMixture]


# --------------------------------------------------------------------------
# constructors


def tmsv_tail(r, cutoff):
    """Probability mass of TMSV photon numbers ``n >= cutoff``."""
    return float(np.tanh(r) ** (2 * cutoff))


def tmsv_cutoff(r, tol=1e-10):
    """Smallest cutoff whose TMSV truncation tail is below ``tol``."""
    lam = np.tanh(r) ** 2
    if lam == 0.0:
        return 1
    return max(1, int(np.ceil(np.log(tol) / np.log(lam))) + 1)


def make_two_mode_squeezed_vacuum(r, cutoff, tail_tol=1e-10):
    """Two-mode squeezed vacuum ``sum_n tanh(r)^n / cosh(r) |n, n>`` on ``cutoff`` levels per mode."""
    if r < 0:
        raise ValueError("squeezing parameter must be nonnegative")
    tail = tmsv_tail(r, cutoff)
    if tail >= tail_tol:
        raise TruncationError(tail, tail_tol, f"r={r}, cutoff={cutoff}; need cutoff >= {tmsv_cutoff(r, tail_tol)}")
    n = np.arange(cutoff)
    amp = np.tanh(r) ** n / np.cosh(r)
    psi = np.zeros(cutoff * cutoff)
    psi[n * cutoff + n] = amp
    psi /= np.linalg.norm(psi)
    return FockDensityMatrix(cutoff, cutoff, np.outer(psi, psi).astype(complex))


def make_gaussian_tmsv(r):
    """Closed-form moments of the two-mode squeezed vacuum (x correlated, p anticorrelated)."""
    if r < 0:
        raise ValueError("squeezing parameter must be nonnegative")
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    cov = np.array(
        [
            [c, 0, s, 0],
            [0, c, 0, -s],
            [s, 0, c, 0],
            [0, -s, 0, c],
        ]
    )
    return GaussianState(np.zeros(4), cov)


def vacuum_gaussian():
    return GaussianState(np.zeros(4), np.eye(4))


def coherent_local(alpha):
    """Single-mode coherent state |alpha> as Gaussian moments."""
    alpha = complex(alpha)
    return SingleModeGaussian([2 * alpha.real, 2 * alpha.imag], np.eye(2))


def squeezed_thermal_local(nbar=0.0, r=0.0, angle=0.0, mean=(0.0, 0.0)):
    """Displaced squeezed thermal state; ``angle`` is the direction of the squeezed quadrature."""
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    cov = (2 * nbar + 1) * rot @ np.diag([np.exp(-2 * r), np.exp(2 * r)]) @ rot.T
    return SingleModeGaussian(np.asarray(mean, dtype=float), 0.5 * (cov + cov.T))


def product_gaussian(local_a, local_b):
    """Two-mode Gaussian product state of two single-mode Gaussians."""
    cov = np.zeros((4, 4))
    cov[:2, :2] = local_a.cov
    cov[2:, 2:] = local_b.cov
    return GaussianState(np.concatenate([local_a.mean, local_b.mean]), cov)


def _random_gaussian_local(rng):
    return squeezed_thermal_local(
        nbar=rng.uniform(0.0, 0.3),
        r=rng.uniform(0.0, 0.5),
        angle=rng.uniform(0.0, np.pi),
        mean=rng.uniform(-2.0, 2.0, size=2),
    )


def _random_fock_local(rng, max_dim=8):
    dim = int(rng.integers(2, max_dim + 1))
    rank = int(rng.integers(1, 3))
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return SingleModeFock(rho / np.trace(rho).real)


def make_separable_random(n_terms, seed, family="gaussian"):
    """Seeded random separable mixture.

    ``family="gaussian"`` draws displaced squeezed thermal local states;
    ``family="fock"`` draws rank-1 or rank-2 local density matrices with at
    most 8 Fock levels.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    if family not in ("gaussian", "fock"):
        raise ValueError(f"unknown family {family!r}")
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0.05, 1.0, size=n_terms)
    draw = _random_gaussian_local if family == "gaussian" else _random_fock_local
    states_a, states_b = [], []
    for _ in range(n_terms):
        states_a.append(draw(rng))
        states_b.append(draw(rng))
    return SeparableMixture.from_weights(weights, states_a, states_b)


# --------------------------------------------------------------------------
# Fock <-> Gaussian conversions


def gaussian_to_fock(local, cutoff, tail_tol=1e-8):
    """Fock matrix of a single-mode Gaussian state on ``cutoff`` levels.

    Built as ``D(alpha) R S rho_th S^dag R^dag D^dag`` in an enlarged space and
    cropped; raises :class:`TruncationError` if the cropped trace deficit
    exceeds ``tail_tol``.
    """
    cov = np.asarray(local.cov)
    nu = np.sqrt(np.linalg.det(cov))
    evals, evecs = np.linalg.eigh(cov / nu)
    r = 0.25 * np.log(evals[1] / evals[0])
    angle = np.arctan2(evecs[1, 0], evecs[0, 0])
    nbar = max(0.0, 0.5 * (nu - 1.0))
    alpha = 0.5 * (local.mean[0] + 1j * local.mean[1])

    big = max(2 * cutoff, cutoff + 60)
    a = annihilation(big)
    ad = a.T
    k = np.arange(big)
    if nbar > 0:
        rho = np.diag(nbar**k / (nbar + 1.0) ** (k + 1)).astype(complex)
    else:
        rho = np.zeros((big, big), dtype=complex)
        rho[0, 0] = 1.0
    if r > 0:
        sq = expm(0.5 * r * (a @ a - ad @ ad))
        rho = sq @ rho @ sq.conj().T
    rot = np.diag(np.exp(1j * angle * k))
    rho = rot @ rho @ rot.conj().T
    if alpha != 0:
        disp = expm(alpha * ad - np.conj(alpha) * a)
        rho = disp @ rho @ disp.conj().T
    cropped = rho[:cutoff, :cutoff]
    tail = 1.0 - np.trace(cropped).real
    if tail > tail_tol:
        raise TruncationError(tail, tail_tol, f"single-mode Gaussian at cutoff {cutoff}")
    cropped = 0.5 * (cropped + cropped.conj().T)
    return cropped / np.trace(cropped).real


def local_to_fock(local, cutoff, tail_tol=1e-8):
    if isinstance(local, SingleModeGaussian):
        return gaussian_to_fock(local, cutoff, tail_tol)
    mat = np.asarray(local.matrix)
    if local.dim <= cutoff:
        out = np.zeros((cutoff, cutoff), dtype=complex)
        out[: local.dim, : local.dim] = mat
        return out
    tail = np.trace(mat[cutoff:, cutoff:]).real
    if tail > tail_tol:
        raise TruncationError(tail, tail_tol, f"local Fock state of dim {local.dim} at cutoff {cutoff}")
    out = mat[:cutoff, :cutoff]
    return out / np.trace(out).real


def mixture_to_density(mixture, cutoff_a, cutoff_b, tail_tol=1e-8):
    """Flatten a separable mixture into ``sum_r P_r rho_r^A (x) rho_r^B``."""
    n = cutoff_a * cutoff_b
    rho = np.zeros((n, n), dtype=complex)
    for t in mixture.terms:
        ra = local_to_fock(t.state_a, cutoff_a, tail_tol)
        rb = local_to_fock(t.state_b, cutoff_b, tail_tol)
        rho += t.weight * np.kron(ra, rb)
    rho = 0.5 * (rho + rho.conj().T)
    return FockDensityMatrix(cutoff_a, cutoff_b, rho / np.trace(rho).real)


def partial_trace(rho, keep="a"):
    """Reduced single-mode density matrix of mode ``keep``."""
    t = rho.tensor
    if keep == "a":
        return np.einsum("nmkm->nk", t)
    if keep == "b":
        return np.einsum("nmnk->mk", t)
    raise ValueError("keep must be 'a' or 'b'")


def partial_transpose(rho):
    """Partial transpose on mode B, as a flat matrix."""
    t = rho.tensor.transpose(0, 3, 2, 1)
    n = rho.dim_a * rho.dim_b
    return t.reshape(n, n)


def ppt_min_eigenvalue(rho):
    """Smallest eigenvalue of the partial transpose (negative => entangled)."""
    pt = partial_transpose(rho)
    return float(np.linalg.eigvalsh(0.5 * (pt + pt.conj().T)).min())


def gaussian_ppt_min_eigenvalue(state):
    """Smallest eigenvalue of ``V~ + i Omega`` with ``V~`` the partially transposed covariance."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    vt = flip @ np.asarray(state.cov) @ flip
    return float(np.linalg.eigvalsh(vt + 1j * OMEGA).min())


def symplectic_eigenvalues(cov):
    """Symplectic eigenvalues of a 2n x 2n covariance (xpxp ordering), ascending, one per mode."""
    n = cov.shape[0] // 2
    omega = np.kron(np.eye(n), OMEGA_1)
    ev = np.sort(np.abs(np.linalg.eigvals(1j * omega @ cov)))
    return ev[::2]


def _single_mode_ladder_moments(mat):
    dim = mat.shape[0]
    a = annihilation(dim)
    ea = np.trace(mat @ a)
    eaa = np.trace(mat @ a @ a)
    n = np.trace(mat @ a.T @ a).real
    return ea, eaa, n


# coefficients u in R_k = u a + conj(u) a^dag for x and p
_QUAD_COEF = np.array([1.0 + 0j, -1j])


def _local_block(ea, eaa, n):
    mean = np.array([2 * ea.real, 2 * ea.imag])
    block = np.empty((2, 2))
    for j in range(2):
        for k in range(2):
            uj, uk = _QUAD_COEF[j], _QUAD_COEF[k]
            sym = 2 * (uj * uk * eaa).real + 2 * (uj * np.conj(uk)).real * (n + 0.5)
            block[j, k] = sym - mean[j] * mean[k]
    return mean, block


def single_mode_moments(local):
    """Mean and covariance (2x2) of a single-mode state."""
    if isinstance(local, SingleModeGaussian):
        return np.array(local.mean), np.array(local.cov)
    return _local_block(*_single_mode_ladder_moments(np.asarray(local.matrix)))


def fock_to_gaussian_moments(rho):
    """First and symmetrized second moments of a Fock state, as a :class:`GaussianState`.

    Single-mode moments use normal-ordered expectations so the truncation edge
    does not bias ``<a a^dag>``.
    """
    da, db = rho.dim_a, rho.dim_b
    a1, b1 = annihilation(da), annihilation(db)
    ia, ib = np.eye(da), np.eye(db)
    mat = np.asarray(rho.entries)

    def ev(op):
        # Tr(rho op) without the O(N^3) product
        return np.sum(mat * op.T)

    mean_a, block_a = _local_block(
        ev(np.kron(a1, ib)), ev(np.kron(a1 @ a1, ib)), ev(np.kron(a1.T @ a1, ib)).real
    )
    mean_b, block_b = _local_block(
        ev(np.kron(ia, b1)), ev(np.kron(ia, b1 @ b1)), ev(np.kron(ia, b1.T @ b1)).real
    )
    eab, eabd = ev(np.kron(a1, b1)), ev(np.kron(a1, b1.T))
    cross = np.empty((2, 2))
    for j in range(2):
        for k in range(2):
            u, v = _QUAD_COEF[j], _QUAD_COEF[k]
            second = 2 * (u * v * eab + u * np.conj(v) * eabd).real
            cross[j, k] = second - mean_a[j] * mean_b[k]
    cov = np.block([[block_a, cross], [cross.T, block_b]])
    cov = 0.5 * (cov + cov.T)
    return GaussianState(np.concatenate([mean_a, mean_b]), cov)


def moments(state):
    """Exact mean vector and covariance matrix of any supported two-mode state."""
    if isinstance(state, GaussianState):
        return np.array(state.mean), np.array(state.cov)
    if isinstance(state, FockDensityMatrix):
        g = state.__dict__.get("_moments")
        if g is None:
            g = fock_to_gaussian_moments(state)
            object.__setattr__(state, "_moments", g)
        return np.array(g.mean), np.array(g.cov)
    if isinstance(state, SeparableMixture):
        mean = np.zeros(4)
        second = np.zeros((4, 4))
        for t in state.terms:
            ma, va = single_mode_moments(t.state_a)
            mb, vb = single_mode_moments(t.state_b)
            m = np.concatenate([ma, mb])
            v = np.zeros((4, 4))
            v[:2, :2] = va
            v[2:, 2:] = vb
            mean += t.weight * m
            second += t.weight * (v + np.outer(m, m))
        cov = second - np.outer(mean, mean)
        return mean, 0.5 * (cov + cov.T)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def local_variances(state):
    """Per-term local quadrature variances of a separable mixture.

    Returns an array of shape ``(n_terms, 4)`` with columns
    ``var(x_A), var(p_A), var(x_B), var(p_B)``.
    """
    rows = []
    for t in state.terms:
        _, va = single_mode_moments(t.state_a)
        _, vb = single_mode_moments(t.state_b)
        rows.append([va[0, 0], va[1, 1], vb[0, 0], vb[1, 1]])
    return np.array(rows)


def describe_state(state):
    """Short human-readable label for reports."""
    if isinstance(state, GaussianState):
        return "gaussian"
    if isinstance(state, FockDensityMatrix):
        return f"fock[{state.dim_a}x{state.dim_b}]"
    if isinstance(state, SeparableMixture):
        return f"separable_mixture[{len(state.terms)} terms]"
    return type(state).__name__


def rotation_vector(theta):
    """Coefficients of ``x_theta = cos(theta) x + sin(theta) p``."""
    return np.array([np.cos(theta), np.sin(theta)])


