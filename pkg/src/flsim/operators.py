"""Dense operator and superoperator machinery.

Operators are plain complex ``numpy`` arrays. Density matrices are mapped
into Fock-Liouville space by **row stacking**::

    vec(rho)[i * n + j] = rho[i, j]

which is the ``|i> (x) |j>*`` ordering, so that ``vec(A rho B) =
kron(A, B.T) @ vec(rho)``. Every superoperator built here uses that
convention; :func:`liouvillian` is checked against a direct evaluation of
the master-equation right-hand side in the test suite.

Units: throughout flsim angular frequencies are in rad/us and times in us.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    BranchAmbiguityError,
    DimensionMismatchError,
    InvalidInputError,
    NumericalError,
)

__all__ = [
    "JumpChannel",
    "kron",
    "dag",
    "is_hermitian",
    "matrix_exp",
    "matrix_log",
    "vectorize",
    "devectorize",
    "spre",
    "spost",
    "sprepost",
    "hamiltonian_superop",
    "dissipator",
    "liouvillian",
    "lindblad_rhs",
    "eig",
    "EigResult",
]


@dataclass(frozen=True)
class JumpChannel:
    """A Lindblad channel ``rate * D[operator]``."""

    operator: np.ndarray
    rate: float

    def __post_init__(self):
        op = np.asarray(self.operator, dtype=complex)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise InvalidInputError(f"jump operator must be square, got {op.shape}")
        if not np.isfinite(self.rate) or self.rate < 0:
            raise InvalidInputError(f"jump rate must be finite and >= 0, got {self.rate}")
        object.__setattr__(self, "operator", op)
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def dim(self) -> int:
        return self.operator.shape[0]


def _square(a, name="operator") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def kron(*ops) -> np.ndarray:
    """Tensor product of any number of operators (left factor is most significant)."""
    if not ops:
        raise InvalidInputError("kron needs at least one operator")
    return reduce(np.kron, (np.asarray(o) for o in ops))


def dag(a) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def is_hermitian(a, rtol=1e-12) -> bool:
    """True if ``max|A - A^dag| < rtol * max|A|`` (zero matrix counts as Hermitian)."""
    a = _square(a)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0:
        return True
    return np.max(np.abs(a - dag(a))) < rtol * scale


def matrix_exp(a, t=1.0) -> np.ndarray:
    """Return ``exp(a * t)``.

    Uses scaling and squaring with Pade approximants (``scipy.linalg.expm``).
    ``t == 0`` returns the identity exactly.
    """
    a = _square(a)
    if not np.all(np.isfinite(a)) or not np.isfinite(t):
        raise InvalidInputError("matrix_exp requires finite entries")
    n = a.shape[0]
    if t == 0 or not np.any(a):
        return np.eye(n, dtype=np.result_type(a.dtype, float))
    return scipy.linalg.expm(a * t)


def matrix_log(
    p,
    period=1.0,
    *,
    branch="strict",
    branch_tol=1e-12,
    verify=True,
    verify_tol=1e-8,
    verify_floor=0.0,
) -> np.ndarray:
    """Logarithm of a one-period propagator, divided by the period.

    Returns ``Log(p) / period`` computed from the Schur form by inverse
    scaling and squaring (``scipy.linalg.logm``), which copes with the
    defective propagators typical of Lindblad dynamics.

    Args:
        p: One-period propagator. Its spectral radius must not exceed
            ``1 + 1e-8``.
        period: Positive period ``T``.
        branch: ``"strict"`` raises :class:`BranchAmbiguityError` when an
            eigenvalue lies within ``branch_tol`` of the closed negative real
            axis. ``"principal"`` accepts such eigenvalues and assigns them
            the argument ``+pi``; only the imaginary part of the affected
            (decaying) modes depends on this choice.
        branch_tol: Distance to the negative real axis counted as ambiguous.
        verify: Re-exponentiate and compare with ``p``.
        verify_tol: Relative tolerance (w.r.t. ``max|p|``) of the round trip.
        verify_floor: If positive, the round trip is checked only on the
            invariant subspace of eigenvalues with ``|mu| > verify_floor``.
            Modes that shrink by more than this factor per period are not
            resolvable in double precision once the propagator is strongly
            non-normal.
    """
    p = _square(p, "propagator")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("matrix_log requires finite entries")
    if not period > 0:
        raise InvalidInputError(f"period must be positive, got {period}")
    if branch not in ("strict", "principal"):
        raise InvalidInputError(f"unknown branch policy {branch!r}")
    n = p.shape[0]
    if np.array_equal(p, np.eye(n)):
        return np.zeros((n, n), dtype=complex)

    pc = np.asarray(p, dtype=complex)
    tri, _ = scipy.linalg.schur(pc, output="complex")
    ev = np.diag(tri)
    radius = np.max(np.abs(ev))
    if radius > 1 + 1e-8:
        raise InvalidInputError(f"spectral radius {radius:.3e} exceeds 1; not a propagator")
    if branch == "strict":
        dist = np.where(ev.real <= 0, np.abs(ev.imag), np.abs(ev))
        bad = ev[dist < branch_tol]
        if bad.size:
            raise BranchAmbiguityError(
                f"{bad.size} eigenvalue(s) on the negative real axis; principal log undefined",
                eigenvalues=bad,
            )

    with warnings.catch_warnings():
        # accuracy is judged by the round trip below
        warnings.simplefilter("ignore")
        log_p = scipy.linalg.logm(pc)
    if not np.all(np.isfinite(log_p)):
        raise NumericalError("matrix logarithm produced non-finite entries")
    if verify:
        diff = scipy.linalg.expm(log_p) - pc
        if verify_floor > 0:
            _, z, k = scipy.linalg.schur(pc, output="complex", sort=lambda x: abs(x) > verify_floor)
            diff = diff @ z[:, :k]
        err = np.max(np.abs(diff)) if diff.size else 0.0
        scale = np.max(np.abs(p))
        if err > verify_tol * scale:
            raise NumericalError(
                "matrix logarithm failed its round-trip check",
                {"max_abs_error": float(err), "scale": float(scale), "floor": verify_floor},
            )
    return log_p / period


def vectorize(rho) -> np.ndarray:
    """Row-stack a square matrix into a Fock-Liouville vector."""
    rho = _square(rho, "density matrix")
    return rho.reshape(-1).copy()


def devectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise InvalidInputError(f"expected a 1-d vector, got shape {v.shape}")
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise InvalidInputError(f"vector length {v.size} is not a perfect square")
    return v.reshape(n, n).copy()


def spre(a) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho``."""
    a = _square(a)
    return np.kron(a, np.eye(a.shape[0]))


def spost(b) -> np.ndarray:
    """Superoperator of ``rho -> rho @ b``."""
    b = _square(b)
    return np.kron(np.eye(b.shape[0]), b.T)


def sprepost(a, b) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho @ b``."""
    return np.kron(_square(a), _square(b).T)


def hamiltonian_superop(h) -> np.ndarray:
    """Superoperator of ``rho -> -i [h, rho]``."""
    h = _square(h)
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def dissipator(c, rate=1.0) -> np.ndarray:
    """Superoperator of ``rate * (c rho c^dag - {c^dag c, rho} / 2)``."""
    c = np.asarray(_square(c), dtype=complex)
    eye = np.eye(c.shape[0])
    cdc = dag(c) @ c
    return rate * (np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T))


def _check_dims(h, channels: Sequence[JumpChannel]) -> int:
    n = h.shape[0]
    for ch in channels:
        if ch.dim != n:
            raise DimensionMismatchError(
                f"jump operator has dim {ch.dim}, Hamiltonian has dim {n}"
            )
    return n


def liouvillian(h, channels: Sequence[JumpChannel] = ()) -> np.ndarray:
    """Lindblad generator acting on row-stacked density matrices.

    ``devectorize(L @ vectorize(rho)) == -i[h, rho] + sum_k rate_k D[c_k] rho``.
    """
    h = np.asarray(_square(h, "Hamiltonian"), dtype=complex)
    _check_dims(h, channels)
    out = hamiltonian_superop(h)
    for ch in channels:
        if ch.rate:
            out += dissipator(ch.operator, ch.rate)
    return out


def lindblad_rhs(h, channels: Sequence[JumpChannel], rho) -> np.ndarray:
    """Evaluate ``-i[h, rho] + sum rate D[c] rho`` directly in Hilbert space."""
    h = np.asarray(h)
    out = -1j * (h @ rho - rho @ h)
    for ch in channels:
        if not ch.rate:
            continue
        c = ch.operator
        cd = dag(c)
        cdc = cd @ c
        out = out + ch.rate * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
    return out


@dataclass(frozen=True)
class EigResult:
    """Eigenvalues sorted by descending real part, with right eigenvectors as columns."""

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray


def eig(a, *, residual_tol=1e-8) -> EigResult:
    """General eigendecomposition with a per-pair residual check.

    Raises :class:`NumericalError` if LAPACK fails or any pair has
    ``|A v - lambda v| >= residual_tol * |A|`` (2-norms, unit ``v``).
    """
    a = _square(a)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("eig requires finite entries")
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigendecomposition did not converge", {"reason": str(exc)}) from exc
    order = np.lexsort((-w.imag, -w.real))
    w, v = w[order], v[:, order]
    v = v / np.linalg.norm(v, axis=0)
    scale = np.linalg.norm(a, 2) if a.shape[0] <= 64 else np.linalg.norm(a, "fro")
    res = np.linalg.norm(a @ v - v * w, axis=0)
    worst = int(np.argmax(res)) if res.size else 0
    if res.size and res[worst] >= residual_tol * max(scale, np.finfo(float).tiny):
        raise NumericalError(
            "eigenpair residual above tolerance",
            {"index": worst, "residual": float(res[worst]), "norm": float(scale)},
        )
    return EigResult(w, v)
