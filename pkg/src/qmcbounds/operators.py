"""Dense complex linear algebra for finite-dimensional quantum channels.

Everything in this package works on plain ``numpy`` complex arrays.  This
module provides the basic objects (channels given by Kraus operators, GKLS
generators given by a Hamiltonian and jump operators, dense superoperator
matrices) together with the weighted inner-product machinery (KMS inner
product, adjoints, positive-part splits) that the spectral analysis and the
concentration bounds are built on.

Conventions
-----------
* Channels act in the Heisenberg picture, ``phi(x) = sum_i V_i^* x V_i``;
  the predual (Schroedinger) action is ``phi_*(rho) = sum_i V_i rho V_i^*``.
* Superoperators are stored as ``d^2 x d^2`` matrices in the column-stacking
  vectorization ``vec(a @ x @ b) = kron(b.T, a) @ vec(x)``; the convention is
  recorded on every :class:`Superoperator` so it can never silently flip.
* Matrix functions of selfadjoint inputs go through an eigendecomposition;
  exponentials of (generally non-normal) matrices use ``scipy.linalg.expm``.

All operations are pure functions of immutable inputs; nothing here mutates
shared state, so values can be freely shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg as sla

# Default tolerances for double-precision work at dimensions d <= ~32.
# All of them can be overridden per call.
TAU_PSD = 1e-10       # eigenvalue floor: faithfulness / positivity checks
TAU_TRACE = 1e-10     # |tr(rho) - 1| allowed for states
TAU_CHANNEL = 1e-9    # || sum V_i^* V_i - 1 || allowed for channels
TAU_IDENTITY = 1e-12  # generic identity residual

VEC_CONVENTION = "column-stacking"


class DimensionMismatchError(ValueError):
    """Operands live on spaces of different dimension."""


class NotFaithfulError(ValueError):
    """A KMS operation was asked to divide by a singular state."""


class NotSelfadjointError(ValueError):
    """An operation that needs a selfadjoint input received something else."""


class ChannelValidationError(ValueError):
    """Kraus family fails the channel normalization at the given tolerance."""


# ---------------------------------------------------------------------------
# basic matrix helpers
# ---------------------------------------------------------------------------

def as_complex_matrix(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a square complex matrix with finite entries."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix has non-finite entries")
    if dim is not None and a.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {a.shape[0]}")
    return a


def dagger(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def is_selfadjoint(x, tol: float = TAU_IDENTITY) -> bool:
    a = np.asarray(x)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def is_positive_semidefinite(x, tol: float = TAU_PSD) -> bool:
    a = np.asarray(x)
    if not is_selfadjoint(a, max(tol, 1e4 * TAU_IDENTITY)):
        return False
    return bool(np.min(np.linalg.eigvalsh((a + a.conj().T) / 2)) >= -tol)


def uniform_norm(x) -> float:
    """Largest singular value (operator norm on vectors)."""
    return float(np.linalg.norm(np.asarray(x, dtype=complex), 2))


def trace_norm(x) -> float:
    """Sum of singular values, tr|x|."""
    return float(np.sum(np.linalg.svd(np.asarray(x, dtype=complex), compute_uv=False)))


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((dim, dim), order="F")


def hermitian_function(x: np.ndarray, fn: Callable[[np.ndarray], np.ndarray],
                       tol: float = TAU_IDENTITY) -> np.ndarray:
    """Apply ``fn`` to the eigenvalues of a selfadjoint matrix."""
    a = as_complex_matrix(x)
    if not is_selfadjoint(a, max(tol, 1e-9)):
        raise NotSelfadjointError("matrix function of a non-selfadjoint input")
    w, u = np.linalg.eigh((a + a.conj().T) / 2)
    return (u * fn(w)) @ u.conj().T


def state_power(sigma: np.ndarray, power: float, tol: float = TAU_PSD) -> np.ndarray:
    """``sigma**power`` for a faithful state; negative powers need min eig > tol."""
    a = as_complex_matrix(sigma)
    w, u = np.linalg.eigh((a + a.conj().T) / 2)
    if power < 0 and np.min(w) <= tol:
        raise NotFaithfulError("state not faithful")
    w = np.clip(w, tol if power < 0 else 0.0, None)
    return (u * np.power(w, power)) @ u.conj().T


def positive_negative_parts(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Functional-calculus split x = x_+ - x_- of a selfadjoint matrix."""
    w, u = np.linalg.eigh((x + x.conj().T) / 2)
    plus = (u * np.clip(w, 0.0, None)) @ u.conj().T
    minus = (u * np.clip(-w, 0.0, None)) @ u.conj().T
    return plus, minus


def state_matrix(rho) -> np.ndarray:
    """Accept a DensityMatrix or a bare array and return the array."""
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return as_complex_matrix(rho)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

class DensityMatrix:
    """A positive semidefinite, unit-trace matrix (checked, not assumed)."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, tol_psd: float = TAU_PSD, tol_trace: float = TAU_TRACE):
        m = as_complex_matrix(matrix)
        m = (m + m.conj().T) / 2 if is_selfadjoint(m, 1e-9) else m
        if not is_selfadjoint(m, 1e-9):
            raise NotSelfadjointError("density matrix must be selfadjoint")
        eigmin = float(np.min(np.linalg.eigvalsh(m)))
        if eigmin < -tol_psd:
            raise ValueError(f"density matrix has eigenvalue {eigmin:.3e} below -{tol_psd:g}")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > tol_trace:
            raise ValueError(f"density matrix trace {tr!r} differs from 1 beyond {tol_trace:g}")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.matrix)))

    def is_faithful(self, tol: float = TAU_PSD) -> bool:
        return self.min_eigenvalue() > tol

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityMatrix(dim={self.dim})"


@dataclass(frozen=True)
class ChannelValidation:
    """Report of the channel normalization check sum V_i^* V_i = 1."""

    max_deviation: float
    tolerance: float
    passed: bool
    zero_kraus_labels: tuple = ()


class KrausChannel:
    """A completely positive map given by an ordered, labeled Kraus family.

    Heisenberg action ``phi(x) = sum_i V_i^* x V_i``.  With
    ``expect_channel=True`` (the default) the family must satisfy
    ``sum_i V_i^* V_i = 1`` within ``tol``; pass ``expect_channel=False``
    for deliberately sub- or super-normalized completely positive families
    (e.g. tilted transition operators), which are flagged via
    ``is_channel``.
    """

    def __init__(self, kraus: Iterable, labels: Sequence[Hashable] | None = None, *,
                 expect_channel: bool = True, tol: float = TAU_CHANNEL):
        ops = tuple(as_complex_matrix(k) for k in kraus)
        if not ops:
            raise ValueError("need at least one Kraus operator")
        dim = ops[0].shape[0]
        for k in ops:
            if k.shape[0] != dim:
                raise DimensionMismatchError("Kraus operators of mixed dimension")
        if labels is None:
            labels = tuple(range(len(ops)))
        labels = tuple(labels)
        if len(labels) != len(ops):
            raise ValueError("one label per Kraus operator required")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        self.kraus = ops
        self.labels = labels
        self.dim = dim
        self._stack = np.stack(ops)
        report = validate_kraus(ops, labels, tol)
        self.channel_deviation = report.max_deviation
        self.is_channel = report.passed
        if expect_channel and not report.passed:
            raise ChannelValidationError(
                f"sum V_i^* V_i deviates from identity by {report.max_deviation:.3e} "
                f"(tolerance {tol:g})")

    def __len__(self) -> int:
        return len(self.kraus)

    def index(self, label) -> int:
        return self.labels.index(label)

    def heisenberg(self, x) -> np.ndarray:
        """sum_i V_i^* x V_i."""
        a = as_complex_matrix(x, self.dim)
        return np.einsum("iqp,qr,irs->ps", self._stack.conj(), a, self._stack)

    def schrodinger(self, rho) -> np.ndarray:
        """sum_i V_i rho V_i^*."""
        a = as_complex_matrix(state_matrix(rho), self.dim)
        return np.einsum("ipq,qr,isr->ps", self._stack, a, self._stack.conj())

    def outcome_probabilities(self, rho) -> np.ndarray:
        """tr(V_i rho V_i^*) per label, clipped at zero."""
        a = state_matrix(rho)
        p = np.einsum("ipq,qr,ipr->i", self._stack, a, self._stack.conj()).real
        return np.clip(p, 0.0, None)

    def __repr__(self) -> str:  # pragma: no cover
        return f"KrausChannel(dim={self.dim}, outcomes={len(self.kraus)})"


def validate_kraus(ops: Sequence[np.ndarray], labels: Sequence, tol: float) -> ChannelValidation:
    total = sum(dagger(k) @ k for k in ops)
    dev = float(np.max(np.abs(total - np.eye(ops[0].shape[0]))))
    zeros = tuple(l for l, k in zip(labels, ops) if np.max(np.abs(k)) == 0.0)
    return ChannelValidation(max_deviation=dev, tolerance=tol, passed=dev <= tol,
                             zero_kraus_labels=zeros)


def validate_channel(channel: KrausChannel, tol: float = TAU_CHANNEL) -> ChannelValidation:
    """Report-style normalization check of an existing Kraus family."""
    return validate_kraus(channel.kraus, channel.labels, tol)


class GKLSGenerator:
    """Continuous-time generator from a Hamiltonian and labeled jump operators.

    Heisenberg form ``gen(x) = -i[H, x] + sum_i (L_i^* x L_i - {L_i^* L_i, x}/2)``
    with the no-jump part ``exp(t gen0)(x) = exp(t G)^* x exp(t G)`` for
    ``G = iH - sum_i L_i^* L_i / 2`` and jump maps ``J_i(x) = L_i^* x L_i``.
    """

    def __init__(self, hamiltonian, jumps: Iterable, labels: Sequence[Hashable] | None = None,
                 tol: float = 1e-9):
        h = as_complex_matrix(hamiltonian)
        if not is_selfadjoint(h, tol):
            raise NotSelfadjointError("Hamiltonian must be selfadjoint")
        ops = tuple(as_complex_matrix(l, h.shape[0]) for l in jumps)
        if labels is None:
            labels = tuple(range(len(ops)))
        labels = tuple(labels)
        if len(labels) != len(ops):
            raise ValueError("one label per jump operator required")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        self.hamiltonian = (h + h.conj().T) / 2
        self.jumps = ops
        self.labels = labels
        self.dim = h.shape[0]
        self.no_jump_generator_matrix = 1j * self.hamiltonian - 0.5 * sum(
            dagger(l) @ l for l in ops)  # the matrix G
        # unitality residual of the generator, gen(1) = 0 up to rounding
        self.unitality_residual = float(np.max(np.abs(self.apply(np.eye(self.dim)))))

    def index(self, label) -> int:
        return self.labels.index(label)

    def apply(self, x) -> np.ndarray:
        """Heisenberg generator applied to x."""
        a = as_complex_matrix(x, self.dim)
        h = self.hamiltonian
        out = -1j * (h @ a - a @ h)
        for l in self.jumps:
            ll = dagger(l) @ l
            out = out + dagger(l) @ a @ l - 0.5 * (ll @ a + a @ ll)
        return out

    def apply_dual(self, rho) -> np.ndarray:
        """Predual (master-equation) generator applied to rho."""
        a = as_complex_matrix(state_matrix(rho), self.dim)
        h = self.hamiltonian
        out = 1j * (h @ a - a @ h)
        for l in self.jumps:
            ll = dagger(l) @ l
            out = out + l @ a @ dagger(l) - 0.5 * (ll @ a + a @ ll)
        return out

    def _exp_g(self, t: float) -> np.ndarray:
        return sla.expm(t * self.no_jump_generator_matrix)

    def no_jump(self, t: float, x) -> np.ndarray:
        """Heisenberg no-jump semigroup exp(tG)^* x exp(tG); t >= 0.

        The exponential uses scaling-and-squaring (``scipy.linalg.expm``),
        accurate to ~1e-10 relative at desk-scale dimensions and times.
        """
        if t < 0:
            raise ValueError("no-jump semigroup needs t >= 0")
        a = as_complex_matrix(x, self.dim)
        e = self._exp_g(t)
        return dagger(e) @ a @ e

    def no_jump_dual(self, t: float, rho) -> np.ndarray:
        """Predual no-jump semigroup exp(tG) rho exp(tG)^*; t >= 0."""
        if t < 0:
            raise ValueError("no-jump semigroup needs t >= 0")
        a = as_complex_matrix(state_matrix(rho), self.dim)
        e = self._exp_g(t)
        return e @ a @ dagger(e)

    def jump(self, label, x) -> np.ndarray:
        """J_i(x) = L_i^* x L_i."""
        l = self.jumps[self.index(label)]
        return dagger(l) @ as_complex_matrix(x, self.dim) @ l

    def jump_dual(self, label, rho) -> np.ndarray:
        """J_i^*(rho) = L_i rho L_i^*."""
        l = self.jumps[self.index(label)]
        return l @ as_complex_matrix(state_matrix(rho), self.dim) @ dagger(l)

    def __repr__(self) -> str:  # pragma: no cover
        return f"GKLSGenerator(dim={self.dim}, jumps={len(self.jumps)})"


@dataclass(frozen=True)
class Superoperator:
    """Dense matrix of a linear map on d x d matrices, with its vectorization tag."""

    dim: int
    matrix: np.ndarray
    convention: str = VEC_CONVENTION

    def __post_init__(self):
        d2 = self.dim * self.dim
        if self.matrix.shape != (d2, d2):
            raise DimensionMismatchError(
                f"superoperator matrix must be {d2}x{d2}, got {self.matrix.shape}")
        if self.convention != VEC_CONVENTION:
            raise ValueError(f"unsupported vectorization convention {self.convention!r}")

    def apply(self, x) -> np.ndarray:
        return unvec(self.matrix @ vec(as_complex_matrix(x, self.dim)), self.dim)


class ObservationFunction:
    """Real value per outcome label; evaluation over a channel's label order."""

    def __init__(self, values: Mapping[Hashable, float]):
        vals = dict(values)
        if not vals:
            raise ValueError("observation function needs at least one value")
        arr = np.asarray(list(vals.values()), dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("observation values must be finite")
        self.values = vals

    def vector(self, labels: Sequence[Hashable]) -> np.ndarray:
        missing = [l for l in labels if l not in self.values]
        if missing:
            raise KeyError(f"observation function undefined on labels {missing}")
        return np.asarray([float(self.values[l]) for l in labels], dtype=float)

    def __repr__(self) -> str:  # pragma: no cover
        return f"ObservationFunction({self.values!r})"


def observation_vector(f, labels: Sequence[Hashable]) -> np.ndarray:
    """Coerce dict / ObservationFunction / array-like to a per-label vector."""
    if isinstance(f, ObservationFunction):
        return f.vector(labels)
    if isinstance(f, Mapping):
        return ObservationFunction(f).vector(labels)
    arr = np.asarray(f, dtype=float)
    if arr.shape != (len(labels),):
        raise DimensionMismatchError(
            f"observation vector of length {arr.shape} does not match {len(labels)} labels")
    if not np.all(np.isfinite(arr)):
        raise ValueError("observation values must be finite")
    return arr


# ---------------------------------------------------------------------------
# channel application / duality
# ---------------------------------------------------------------------------

def apply_heisenberg(channel: KrausChannel, x) -> np.ndarray:
    """sum_i V_i^* x V_i."""
    return channel.heisenberg(x)


def apply_schrodinger(channel: KrausChannel, rho) -> np.ndarray:
    """sum_i V_i rho V_i^*; the trace dual of the Heisenberg action."""
    return channel.schrodinger(rho)


# ---------------------------------------------------------------------------
# superoperator matrices
# ---------------------------------------------------------------------------

def kraus_superoperator_matrix(ops: Sequence[np.ndarray], picture: str = "heisenberg") -> np.ndarray:
    """Column-stacking matrix of a Kraus family in either picture."""
    if picture == "heisenberg":
        # vec(V^* x V) = kron(V.T, V^*) vec(x)
        return sum(np.kron(v.T, v.conj().T) for v in ops)
    if picture == "schrodinger":
        return sum(np.kron(v.conj(), v) for v in ops)
    raise ValueError(f"unknown picture {picture!r}")


def gkls_superoperator_matrix(gen: GKLSGenerator, picture: str = "heisenberg") -> np.ndarray:
    d = gen.dim
    eye = np.eye(d)
    h = gen.hamiltonian
    m = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for l in gen.jumps:
        ll = dagger(l) @ l
        m = m + np.kron(l.T, l.conj().T) - 0.5 * (np.kron(eye, ll) + np.kron(ll.T, eye))
    if picture == "heisenberg":
        return m
    if picture == "schrodinger":
        return m.conj().T
    raise ValueError(f"unknown picture {picture!r}")


def superoperator_matrix(mapping, dim: int | None = None,
                         picture: str = "heisenberg") -> Superoperator:
    """Dense matrix representation of a map on d x d matrices.

    Accepts a :class:`KrausChannel`, a :class:`GKLSGenerator`, an existing
    :class:`Superoperator` (returned unchanged) or a callable together with
    ``dim``, in which case the matrix is assembled column by column from the
    action on matrix units.
    """
    if isinstance(mapping, Superoperator):
        return mapping
    if isinstance(mapping, KrausChannel):
        if picture == "heisenberg":
            return Superoperator(mapping.dim, kraus_superoperator_matrix(mapping.kraus))
        return Superoperator(mapping.dim,
                             kraus_superoperator_matrix(mapping.kraus, "schrodinger"))
    if isinstance(mapping, GKLSGenerator):
        return Superoperator(mapping.dim, gkls_superoperator_matrix(mapping, picture))
    if callable(mapping):
        if dim is None:
            raise ValueError("dim is required for a callable map")
        cols = []
        for j in range(dim):
            for i in range(dim):
                unit = np.zeros((dim, dim), dtype=complex)
                unit[i, j] = 1.0
                cols.append(vec(as_complex_matrix(mapping(unit), dim)))
        return Superoperator(dim, np.column_stack(cols))
    raise TypeError(f"cannot build a superoperator from {type(mapping)!r}")


# ---------------------------------------------------------------------------
# GKLS convenience wrappers
# ---------------------------------------------------------------------------

def gkls_apply(gen: GKLSGenerator, x) -> np.ndarray:
    return gen.apply(x)


def no_jump_semigroup(gen: GKLSGenerator, t: float, x) -> np.ndarray:
    return gen.no_jump(t, x)


def jump_map(gen: GKLSGenerator, label, x) -> np.ndarray:
    return gen.jump(label, x)


# ---------------------------------------------------------------------------
# KMS inner product machinery
# ---------------------------------------------------------------------------

def kms_inner(x, y, sigma, tol: float = TAU_PSD) -> complex:
    """KMS inner product tr(sigma^(1/2) x^* sigma^(1/2) y) for faithful sigma."""
    s = state_matrix(sigma)
    x = as_complex_matrix(x, s.shape[0])
    y = as_complex_matrix(y, s.shape[0])
    if float(np.min(np.linalg.eigvalsh(s))) <= tol:
        raise NotFaithfulError("state not faithful")
    root = state_power(s, 0.5, tol)
    return complex(np.trace(root @ dagger(x) @ root @ y))


def kms_norm(x, sigma, tol: float = TAU_PSD) -> float:
    v = kms_inner(x, x, sigma, tol)
    return float(np.sqrt(max(v.real, 0.0)))


def kms_weight_matrix(sigma, power: float = 1.0, tol: float = TAU_PSD) -> np.ndarray:
    """Vectorized Gram matrix of the KMS product: kron(conj(sigma^p/2), sigma^p/2)."""
    s = state_matrix(sigma)
    if float(np.min(np.linalg.eigvalsh(s))) <= tol:
        raise NotFaithfulError("state not faithful")
    half = state_power(s, power / 2.0, tol)
    return np.kron(half.conj(), half)


def kms_isometrized_matrix(mapping, sigma, dim: int | None = None) -> np.ndarray:
    """W^(1/2) M W^(-1/2): Hermitian iff the map is KMS-selfadjoint."""
    sup = superoperator_matrix(mapping, dim)
    s = state_matrix(sigma)
    quarter = state_power(s, 0.25)
    quarter_inv = state_power(s, -0.25)
    w_half = np.kron(quarter.conj(), quarter)
    w_half_inv = np.kron(quarter_inv.conj(), quarter_inv)
    return w_half @ sup.matrix @ w_half_inv


def kms_operator_norm(mapping, sigma, dim: int | None = None) -> float:
    """Operator norm induced by the KMS norm (largest singular value)."""
    return float(np.linalg.norm(kms_isometrized_matrix(mapping, sigma, dim), 2))


def kms_adjoint(mapping, sigma):
    """Adjoint with respect to the KMS inner product of a faithful state.

    For a Kraus family the adjoint is returned as a Kraus family with
    operators ``sigma^(1/2) V_i^* sigma^(-1/2)`` under the same labels; for a
    :class:`Superoperator` the conjugated matrix is returned.
    """
    s = state_matrix(sigma)
    if isinstance(mapping, KrausChannel):
        half = state_power(s, 0.5)
        half_inv = state_power(s, -0.5)
        ops = [half @ dagger(v) @ half_inv for v in mapping.kraus]
        return KrausChannel(ops, mapping.labels, expect_channel=False)
    if isinstance(mapping, Superoperator):
        w = kms_weight_matrix(s)
        w_inv = kms_weight_matrix(s, -1.0)
        return Superoperator(mapping.dim, w_inv @ mapping.matrix.conj().T @ w)
    raise TypeError(f"cannot take the KMS adjoint of {type(mapping)!r}")


def kms_positive_parts(x, sigma, tol: float = TAU_IDENTITY) -> tuple[np.ndarray, np.ndarray]:
    """Split a selfadjoint x into KMS-orthogonal positive semidefinite parts.

    Returns ``(x_plus, x_minus)`` with ``x = x_plus - x_minus``, both parts
    positive semidefinite and KMS-orthogonal: conjugate by ``sigma^(1/4)``,
    split by functional calculus, conjugate back.
    """
    s = state_matrix(sigma)
    a = as_complex_matrix(x, s.shape[0])
    if not is_selfadjoint(a, max(tol, 1e-9)):
        raise NotSelfadjointError("positive-part split needs a selfadjoint input")
    quarter = state_power(s, 0.25)
    quarter_inv = state_power(s, -0.25)
    plus, minus = positive_negative_parts(quarter @ a @ quarter)
    return quarter_inv @ plus @ quarter_inv, quarter_inv @ minus @ quarter_inv
