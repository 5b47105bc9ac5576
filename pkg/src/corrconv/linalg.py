"""Dense complex-matrix kernel: tensor products, partial trace/transpose,
Hermitian eigendecomposition, entropies and relative entropy (all in bits).

Subsystems are indexed from 0 in ket order, so for a tripartite state
|abc> the indices are A=0, B=1, C=2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt
import scipy.stats

from .errors import DimensionMismatchError, StateError, SubsystemError

ComplexMatrix = npt.NDArray[np.complex128]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
NEGATIVE_EIG_TOL = 1e-10
SUPPORT_TOL = 1e-12
ROUNDING_TOL = 1e-12


def as_matrix(a: npt.ArrayLike) -> ComplexMatrix:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise StateError("matrix has non-finite entries")
    return m


def dagger(a: ComplexMatrix) -> ComplexMatrix:
    return a.conj().T


def is_hermitian(a: ComplexMatrix, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, trace-1 matrix with its tensor-factor dimensions."""

    matrix: ComplexMatrix
    subsystem_dims: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        m = as_matrix(self.matrix)
        dims = tuple(int(d) for d in self.subsystem_dims) or (m.shape[0],)
        if any(d < 1 for d in dims) or math.prod(dims) != m.shape[0]:
            raise DimensionMismatchError(
                f"subsystem dims {dims} do not factor matrix dimension {m.shape[0]}"
            )
        if not is_hermitian(m):
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateError(f"density matrix trace {tr!r} differs from 1")
        m = (m + dagger(m)) / 2
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < -NEGATIVE_EIG_TOL:
            raise StateError(f"density matrix has negative eigenvalue {min_eig:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_subsystems(self) -> int:
        return len(self.subsystem_dims)

    def eigenvalues(self) -> npt.NDArray[np.float64]:
        return _clip_spectrum(np.linalg.eigvalsh(self.matrix))[::-1]

    def entry(self, row: int, col: int) -> complex:
        return complex(self.matrix[row, col])


@dataclass(frozen=True)
class EigenSpectrum:
    values: npt.NDArray[np.float64]
    vectors: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        return (self.vectors * self.values) @ dagger(self.vectors)


def density(matrix: npt.ArrayLike, dims: Sequence[int] = ()) -> DensityMatrix:
    return DensityMatrix(np.asarray(matrix, dtype=np.complex128), tuple(dims))


def pure_state(vector: npt.ArrayLike, dims: Sequence[int] = ()) -> DensityMatrix:
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), tuple(dims))


def maximally_mixed(dims: Sequence[int]) -> DensityMatrix:
    n = math.prod(dims)
    return DensityMatrix(np.eye(n, dtype=np.complex128) / n, tuple(dims))


def kron(a: npt.ArrayLike, b: npt.ArrayLike) -> ComplexMatrix:
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def tensor(*states: DensityMatrix) -> DensityMatrix:
    matrix = np.ones((1, 1), dtype=np.complex128)
    dims: list[int] = []
    for s in states:
        matrix = np.kron(matrix, s.matrix)
        dims.extend(s.subsystem_dims)
    return DensityMatrix(matrix, tuple(dims))


def _check_index(index: int, dims: Sequence[int]) -> int:
    if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
        raise SubsystemError(f"subsystem index must be an integer, got {index!r}")
    if not 0 <= index < len(dims):
        raise SubsystemError(f"subsystem {index} outside 0..{len(dims) - 1}")
    return int(index)


def embed_operator(op: npt.ArrayLike, targets: Sequence[int], dims: Sequence[int]) -> ComplexMatrix:
    """Lift ``op`` acting on ``targets`` (in the given order) to the full space."""
    dims = list(dims)
    targets = [_check_index(t, dims) for t in targets]
    if len(set(targets)) != len(targets):
        raise SubsystemError(f"repeated subsystem in {targets}")
    op = np.asarray(op, dtype=np.complex128)
    local = math.prod(dims[t] for t in targets)
    if op.shape != (local, local):
        raise DimensionMismatchError(f"operator shape {op.shape} does not act on dims {local}")

    n = len(dims)
    rest = [i for i in range(n) if i not in targets]
    order = targets + rest
    full = np.kron(op, np.eye(math.prod(dims[i] for i in rest), dtype=np.complex128))
    shape = [dims[i] for i in order]
    perm = list(np.argsort(order))
    t = full.reshape(shape + shape).transpose(perm + [n + k for k in perm])
    total = math.prod(dims)
    return t.reshape(total, total)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every subsystem not listed in ``keep``.

    An empty ``keep`` traces everything and returns the 1x1 matrix [[Tr rho]].
    """
    dims = list(rho.subsystem_dims)
    kept = sorted({_check_index(k, dims) for k in keep})
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    current = n
    for idx in sorted(set(range(n)) - set(kept), reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + current)
        current -= 1
    out_dims = [dims[k] for k in kept]
    size = math.prod(out_dims)
    return DensityMatrix(np.asarray(t).reshape(size, size), tuple(out_dims) or (1,))


def partial_transpose(rho: DensityMatrix | ComplexMatrix, subsystem: int, dims: Sequence[int] | None = None) -> ComplexMatrix:
    if isinstance(rho, DensityMatrix):
        matrix, dims = rho.matrix, rho.subsystem_dims
    else:
        matrix = as_matrix(rho)
        if dims is None:
            raise DimensionMismatchError("dims are required for a bare matrix")
    dims = list(dims)
    k = _check_index(subsystem, dims)
    n = len(dims)
    axes = list(range(2 * n))
    axes[k], axes[n + k] = axes[n + k], axes[k]
    return matrix.reshape(dims + dims).transpose(axes).reshape(matrix.shape)


def hermitian_eig(a: npt.ArrayLike) -> EigenSpectrum:
    m = as_matrix(a)
    if not is_hermitian(m, tol=1e-10):
        raise StateError("hermitian_eig called on a non-Hermitian matrix")
    values, vectors = np.linalg.eigh((m + dagger(m)) / 2)
    return EigenSpectrum(values=values[::-1].copy(), vectors=vectors[:, ::-1].copy())


def min_eigenvalue(a: npt.ArrayLike) -> float:
    m = as_matrix(a)
    return float(np.linalg.eigvalsh((m + dagger(m)) / 2)[0])


def _clip_spectrum(values: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    if values.size and values.min() < -NEGATIVE_EIG_TOL:
        raise StateError(f"spectrum has a negative eigenvalue {values.min():.3e}")
    return np.clip(values, 0.0, None)


def shannon_entropy(probabilities: npt.ArrayLike) -> float:
    """Entropy in bits of an already normalized distribution (0 log 0 = 0)."""
    p = _clip_spectrum(np.asarray(probabilities, dtype=np.float64))
    if p.sum() <= 0:
        return 0.0
    return float(scipy.stats.entropy(p, base=2))


def binary_entropy(x: float) -> float:
    return shannon_entropy([x, 1.0 - x])


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return shannon_entropy(np.linalg.eigvalsh(rho.matrix))


def quantum_relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """D(rho||sigma) in bits; ``math.inf`` when supp(rho) is not inside supp(sigma)."""
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(f"relative entropy of {rho.dim}- and {sigma.dim}-dim states")
    w, v = np.linalg.eigh(sigma.matrix)
    # <v_j| rho |v_j> for each eigenvector of sigma
    weights = np.real(np.einsum("ij,ik,kj->j", v.conj(), rho.matrix, v))
    kernel = w <= SUPPORT_TOL
    if np.any(weights[kernel] > SUPPORT_TOL):
        return math.inf
    cross = float(np.sum(weights[~kernel] * np.log2(w[~kernel])))
    value = -von_neumann_entropy(rho) - cross
    # D >= 0; only rounding below zero is absorbed.
    return 0.0 if -ROUNDING_TOL < value < 0.0 else value


def fidelity_with_pure(rho: DensityMatrix, vector: npt.ArrayLike) -> float:
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    v = v / np.linalg.norm(v)
    return float(np.real(v.conj() @ rho.matrix @ v))


def random_unitary(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_density_matrix(dims: Sequence[int], rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    n = math.prod(dims)
    k = rank or n
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    m = g @ dagger(g)
    return DensityMatrix(m / np.trace(m).real, tuple(dims))
