"""Spectral analysis of quantum channels and continuous-time generators.

Invariant states, irreducibility and primitivity diagnostics, spectral gaps
of the multiplicative symmetrization ``psi = phi_dagger phi`` and of the
additive symmetrization of a GKLS generator, the Poisson equation on the
centered subspace, certified pseudoresolvent norms, tilted transition
operators, and the decomposition of a positive-recurrent channel into
irreducible invariant blocks.

Irreducibility is decided by a two-method vote: the eigenstructure criterion
(the eigenvalue at the spectral radius is algebraically simple and the dual
fixed point is a faithful state) cross-checked against reachability of the
full space by Kraus-operator products.  Reachability is probed from random
starting vectors plus witness vectors drawn from the supports of fixed
points, so the two checks agree except under genuine numerical trouble,
which is surfaced as an error instead of silently resolved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .operators import (
    TAU_PSD,
    DensityMatrix,
    KrausChannel,
    GKLSGenerator,
    Superoperator,
    as_complex_matrix,
    dagger,
    is_selfadjoint,
    kms_adjoint,
    kms_isometrized_matrix,
    observation_vector,
    state_matrix,
    state_power,
    superoperator_matrix,
    uniform_norm,
    unvec,
    vec,
)

TAU_EIG = 1e-8   # eigenvalue-cluster resolution for simplicity checks
TAU_PER = 1e-8   # peripheral-spectrum resolution
TAU_DEC = 1e-8   # invariant-subspace commutation / eigenvalue grouping


class HypothesisError(RuntimeError):
    """A spectral hypothesis required by a bound fails for this model."""


class FixedSpaceError(RuntimeError):
    """The fixed space is not one-dimensional; carries the observed dimension."""

    def __init__(self, dimension: int, message: str | None = None):
        self.dimension = dimension
        super().__init__(message or f"fixed space dimension {dimension}")


class InconclusiveIrreducibilityError(RuntimeError):
    """Eigenstructure and reachability votes disagree beyond tolerance."""


# ---------------------------------------------------------------------------
# invariant states and irreducibility
# ---------------------------------------------------------------------------

def _null_space(m: np.ndarray, rcond: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of ker(m), singular values below rcond * s_max."""
    u, s, vh = np.linalg.svd(m)
    cut = rcond * max(s[0], 1.0) if s.size else 0.0
    rank = int(np.sum(s > cut))
    return vh[rank:].conj().T


def _hermitize(x: np.ndarray) -> np.ndarray:
    return (x + x.conj().T) / 2


def invariant_state(channel: KrausChannel, tol: float = 1e-11) -> DensityMatrix:
    """Unique fixed state of the predual action, phi_*(sigma) = sigma.

    Raises :class:`FixedSpaceError` when the fixed space of the predual has
    dimension != 1.  Faithfulness is *not* enforced here; check it with
    ``DensityMatrix.is_faithful``.
    """
    m_s = superoperator_matrix(channel, picture="schrodinger").matrix
    basis = _null_space(m_s - np.eye(m_s.shape[0]))
    if basis.shape[1] != 1:
        raise FixedSpaceError(basis.shape[1])
    sigma = _hermitize(unvec(basis[:, 0], channel.dim))
    tr = float(np.trace(sigma).real)
    if abs(tr) < 1e-12:
        raise FixedSpaceError(1, "fixed point has vanishing trace; eigenproblem defective")
    sigma = sigma / tr
    residual = float(np.max(np.abs(channel.schrodinger(sigma) - sigma)))
    if residual > tol:
        raise FixedSpaceError(1, f"fixed-point residual {residual:.3e} exceeds {tol:g}")
    return DensityMatrix(sigma)


def gkls_steady_state(gen: GKLSGenerator, tol: float = 1e-10) -> DensityMatrix:
    """Unique stationary state of the semigroup, ker of the predual generator."""
    m_s = superoperator_matrix(gen, picture="schrodinger").matrix
    basis = _null_space(m_s)
    if basis.shape[1] != 1:
        raise FixedSpaceError(basis.shape[1])
    sigma = _hermitize(unvec(basis[:, 0], gen.dim))
    tr = float(np.trace(sigma).real)
    if abs(tr) < 1e-12:
        raise FixedSpaceError(1, "stationary solve returned a traceless matrix")
    sigma = sigma / tr
    residual = float(np.max(np.abs(gen.apply_dual(sigma))))
    if residual > max(tol, 1e-9 * uniform_norm(m_s)):
        raise FixedSpaceError(1, f"stationary residual {residual:.3e}")
    return DensityMatrix(sigma)


def _reachable_dimension(kraus: tuple[np.ndarray, ...], v: np.ndarray,
                         rank_tol: float = 1e-10) -> int:
    """Dimension of span{ V_in ... V_i1 v } grown until stable."""
    d = v.shape[0]
    basis = v[:, None] / np.linalg.norm(v)
    for _ in range(d):
        stacked = np.hstack([basis] + [k @ basis for k in kraus])
        u, s, _ = np.linalg.svd(stacked, full_matrices=False)
        grown = u[:, s > rank_tol * max(float(s[0]), 1.0)]
        if grown.shape[1] == basis.shape[1]:
            break
        basis = grown
        if basis.shape[1] == d:
            break
    return basis.shape[1]


@dataclass(frozen=True)
class IrreducibilityEvidence:
    irreducible: bool
    spectral_radius: float
    radius_multiplicity: int
    fixed_point_faithful: bool
    min_fixed_eigenvalue: float
    reachability_full: bool
    reachability_dims: tuple[int, ...]


def _witness_vectors(kraus: tuple[np.ndarray, ...], dual_fixed_basis: np.ndarray,
                     dim: int, seed: int) -> list[np.ndarray]:
    """Starting vectors for the reachability probe.

    Besides random vectors and the standard basis, eigenvectors of Hermitian
    elements of the dual fixed space are included: the support of any fixed
    state is invariant under the Kraus operators, so a deficient block always
    leaves a witness here.
    """
    rng = np.random.default_rng(seed)
    vectors = [rng.standard_normal(dim) + 1j * rng.standard_normal(dim) for _ in range(2)]
    vectors.extend(np.eye(dim, dtype=complex)[:, k] for k in range(dim))
    for col in range(dual_fixed_basis.shape[1]):
        b = unvec(dual_fixed_basis[:, col], dim)
        for h in (_hermitize(b), _hermitize(1j * b)):
            if np.max(np.abs(h)) < 1e-14:
                continue
            _, eigvecs = np.linalg.eigh(h)
            vectors.extend(eigvecs[:, k] for k in range(dim))
    return vectors


def is_irreducible(channel: KrausChannel, tol: float = TAU_EIG,
                   faithful_tol: float = TAU_PSD, seed: int = 7) -> IrreducibilityEvidence:
    """Two-method irreducibility vote for a completely positive Kraus family.

    Eigenstructure check: the eigenvalue at the spectral radius is
    algebraically simple within ``tol`` and the corresponding fixed point of
    the predual is positive definite.  Reachability check: Kraus products
    span the full space from every probed starting vector.  A disagreement
    raises :class:`InconclusiveIrreducibilityError`.
    """
    m_h = superoperator_matrix(channel).matrix
    eigs = np.linalg.eigvals(m_h)
    radius = float(np.max(np.abs(eigs)))
    cluster = tol * max(1.0, radius)
    multiplicity = int(np.sum(np.abs(eigs - radius) <= cluster))

    m_s = m_h.conj().T
    dual_basis = _null_space(m_s - radius * np.eye(m_s.shape[0]))
    faithful = False
    min_eig = -np.inf
    if dual_basis.shape[1] == 1:
        candidate = _hermitize(unvec(dual_basis[:, 0], channel.dim))
        tr = float(np.trace(candidate).real)
        if abs(tr) > 1e-12:
            candidate = candidate / tr
            min_eig = float(np.min(np.linalg.eigvalsh(candidate)))
            faithful = min_eig > faithful_tol
    eig_verdict = multiplicity == 1 and faithful

    dims = tuple(_reachable_dimension(channel._stack, np.asarray(v, dtype=complex))
                 for v in _witness_vectors(channel.kraus, dual_basis, channel.dim, seed))
    reach_verdict = all(d == channel.dim for d in dims)

    if eig_verdict != reach_verdict:
        raise InconclusiveIrreducibilityError(
            f"inconclusive irreducibility: eigenstructure says {eig_verdict}, "
            f"reachability says {reach_verdict} (dims {dims}, multiplicity {multiplicity}, "
            f"min fixed eigenvalue {min_eig:.3e})")
    return IrreducibilityEvidence(
        irreducible=eig_verdict,
        spectral_radius=radius,
        radius_multiplicity=multiplicity,
        fixed_point_faithful=faithful,
        min_fixed_eigenvalue=min_eig,
        reachability_full=reach_verdict,
        reachability_dims=dims,
    )


def is_primitive(channel: KrausChannel, tol: float = TAU_PER) -> bool:
    """Irreducible with peripheral spectrum {1}; errors on reducible input."""
    evidence = is_irreducible(channel)
    if not evidence.irreducible:
        raise HypothesisError("primitivity is undefined for a reducible channel")
    eigs = np.linalg.eigvals(superoperator_matrix(channel).matrix)
    peripheral = eigs[np.abs(eigs) >= 1.0 - tol]
    return bool(np.all(np.abs(peripheral - 1.0) <= tol))


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalues and ergodicity flags of a channel."""

    eigenvalues: np.ndarray
    gap: float
    peripheral: np.ndarray
    irreducible: bool
    primitive: bool | None
    kms_selfadjoint: bool | None


def spectral_report(channel: KrausChannel, sigma=None, tol: float = TAU_PER) -> SpectralReport:
    eigs = np.linalg.eigvals(superoperator_matrix(channel).matrix)
    order = np.argsort(-np.abs(eigs))
    eigs = eigs[order]
    radius = float(np.abs(eigs[0]))
    peripheral = eigs[np.abs(eigs) >= radius - tol]
    interior = np.abs(eigs)[np.abs(eigs) < radius - tol]
    gap = float(radius - interior.max()) if interior.size else radius
    try:
        evidence = is_irreducible(channel)
        irreducible = evidence.irreducible
    except InconclusiveIrreducibilityError:
        irreducible = False
    primitive = None
    if irreducible:
        primitive = bool(np.all(np.abs(peripheral - radius) <= tol))
    kms_flag = None
    if sigma is not None:
        iso = kms_isometrized_matrix(channel, sigma)
        kms_flag = bool(np.max(np.abs(iso - iso.conj().T)) <= 1e-9)
    return SpectralReport(eigenvalues=eigs, gap=gap, peripheral=peripheral,
                          irreducible=irreducible, primitive=primitive,
                          kms_selfadjoint=kms_flag)


# ---------------------------------------------------------------------------
# multiplicative and additive symmetrizations
# ---------------------------------------------------------------------------

def multiplicative_symmetrization(channel: KrausChannel, sigma,
                                  tol: float = 1e-9) -> KrausChannel:
    """psi = phi_dagger phi with Kraus operators V_i sigma^(1/2) V_j^* sigma^(-1/2).

    ``sigma`` must be the invariant state of the channel; the returned family
    is labeled by outcome pairs (i, j).
    """
    s = state_matrix(sigma)
    residual = float(np.max(np.abs(channel.schrodinger(s) - s)))
    if residual > tol:
        raise HypothesisError(
            f"state is not invariant (residual {residual:.3e}); "
            "multiplicative symmetrization undefined")
    half = state_power(s, 0.5)
    half_inv = state_power(s, -0.5)
    ops, labels = [], []
    for i, vi in zip(channel.labels, channel.kraus):
        for j, vj in zip(channel.labels, channel.kraus):
            ops.append(vi @ half @ dagger(vj) @ half_inv)
            labels.append((i, j))
    return KrausChannel(ops, labels, expect_channel=False)


@dataclass(frozen=True)
class MultiplicativeGap:
    epsilon: float
    irreducible: bool
    psi: KrausChannel
    eigenvalues: np.ndarray
    note: str = ""


def multiplicative_gap_report(channel: KrausChannel, sigma) -> MultiplicativeGap:
    """Spectral gap of psi = phi_dagger phi, without raising on a reducible psi."""
    psi = multiplicative_symmetrization(channel, sigma)
    iso = kms_isometrized_matrix(psi, sigma)
    eigs = np.sort(np.linalg.eigvalsh(_hermitize(iso)))
    # psi is a positive KMS-selfadjoint contraction: clamp rounding noise
    eigs = np.clip(eigs, 0.0, None)
    note = ""
    if eigs[0] < -1e-10:
        note = f"negative eigenvalue {eigs[0]:.3e} clamped to 0"
    epsilon = float(1.0 - eigs[-2]) if eigs.size >= 2 else 1.0
    try:
        evidence = is_irreducible(psi)
        irreducible = evidence.irreducible
    except InconclusiveIrreducibilityError:
        irreducible = False
        note = (note + "; " if note else "") + "irreducibility vote inconclusive"
    return MultiplicativeGap(epsilon=epsilon, irreducible=irreducible, psi=psi,
                             eigenvalues=eigs, note=note)


def spectral_gap_multiplicative(channel: KrausChannel, sigma) -> float:
    """Gap 1 - lambda_2 of the multiplicative symmetrization; errors if reducible."""
    report = multiplicative_gap_report(channel, sigma)
    if not report.irreducible or report.epsilon <= 0.0:
        raise HypothesisError(
            "multiplicative symmetrization is reducible; Bernstein-type gap undefined")
    return report.epsilon


@dataclass(frozen=True)
class AdditiveGap:
    epsilon: float
    irreducible: bool
    eigenvalues: np.ndarray
    hamiltonian_commutes: bool
    note: str = ""


def additive_gap_report(gen: GKLSGenerator, sigma) -> AdditiveGap:
    """Spectral gap of the additive symmetrization (L + L_dagger)/2."""
    s = state_matrix(sigma)
    m = superoperator_matrix(gen).matrix
    sup = Superoperator(gen.dim, m)
    m_dag = kms_adjoint(sup, s).matrix
    a = Superoperator(gen.dim, (m + m_dag) / 2)
    iso = kms_isometrized_matrix(a, s)
    eigs = np.sort(np.linalg.eigvalsh(_hermitize(iso)))  # real, <= 0 up to rounding
    top = eigs[-1]
    second = eigs[-2] if eigs.size >= 2 else -np.inf
    multiplicity = int(np.sum(np.abs(eigs - top) <= TAU_EIG))
    # dual fixed point of the symmetrized semigroup at eigenvalue 0
    basis = _null_space(a.matrix.conj().T - top * np.eye(m.shape[0]))
    faithful = False
    if basis.shape[1] == 1:
        candidate = _hermitize(unvec(basis[:, 0], gen.dim))
        tr = float(np.trace(candidate).real)
        if abs(tr) > 1e-12:
            faithful = float(np.min(np.linalg.eigvalsh(candidate / tr))) > TAU_PSD
    irreducible = multiplicity == 1 and faithful
    commutes = float(np.max(np.abs(gen.hamiltonian @ s - s @ gen.hamiltonian))) <= 1e-10
    note = "[H, sigma] = 0: irreducibility of the symmetrization is automatic" if commutes else ""
    return AdditiveGap(epsilon=float(-second), irreducible=irreducible,
                       eigenvalues=eigs, hamiltonian_commutes=commutes, note=note)


def spectral_gap_additive(gen: GKLSGenerator, sigma) -> float:
    report = additive_gap_report(gen, sigma)
    if not report.irreducible or report.epsilon <= 0.0:
        raise HypothesisError(
            "additive symmetrization generates a reducible semigroup; "
            "counting-bound gap undefined")
    return report.epsilon


# ---------------------------------------------------------------------------
# centered subspace, Poisson equation and pseudoresolvent norms
# ---------------------------------------------------------------------------

def centered_basis(sigma) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of F = {x : tr(sigma x) = 0}."""
    s = state_matrix(sigma)
    row = vec(s).conj()[None, :]
    return sla.null_space(row)


def restricted_matrix(mapping, sigma, dim: int | None = None) -> np.ndarray:
    """Matrix of a centered-subspace-preserving map on the basis of F."""
    sup = superoperator_matrix(mapping, dim)
    q = centered_basis(sigma)
    return q.conj().T @ sup.matrix @ q


@dataclass(frozen=True)
class PseudoresolventNorm:
    """Bracketing of || (Id - phi)^(-1) ||_inf on the centered subspace."""

    lower_estimate: float
    certified_upper: float


def _certified_sup_norm_chain(phi_f: np.ndarray, inv_f: np.ndarray, dim: int,
                              max_terms: int = 32) -> float:
    """Certified upper bound on the sup-operator norm of (Id - phi)^(-1)|F.

    Uses the norm equivalence ||x||_HS <= sqrt(d) ||x|| together with the
    resolvent identity (Id - phi)^(-1) = sum_{j<J} phi^j + phi^J (Id - phi)^(-1):
    the minimum over J of (certified partial sums + sqrt(d) * HS tail) is a
    rigorous upper bound, and degenerates gracefully to 1 when phi vanishes
    on F.
    """
    root_d = float(np.sqrt(dim))
    best = root_d * float(np.linalg.norm(inv_f, 2))
    partial = 0.0
    power = np.eye(phi_f.shape[0], dtype=complex)
    for j in range(max_terms):
        # ||phi^j|F|| <= min(1, sqrt(d) ||phi^j|F||_HS); the identity term is exact
        term = 1.0 if j == 0 else min(1.0, root_d * float(np.linalg.norm(power, 2)))
        partial += term
        power = phi_f @ power
        tail = root_d * float(np.linalg.norm(power @ inv_f, 2))
        best = min(best, partial + tail)
    return best


def _sign_matrix(g: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(_hermitize(g))
    signs = np.where(w >= 0.0, 1.0, -1.0)
    return (u * signs) @ u.conj().T


def pseudoresolvent_norm(channel: KrausChannel, sigma, restarts: int = 64,
                         iterations: int = 8, seed: int = 0,
                         max_terms: int = 32) -> PseudoresolventNorm:
    """Sup-norm of (Id - phi)^(-1) restricted to F = {tr(sigma x) = 0}.

    ``lower_estimate`` is a heuristic maximizer (projected ascent over
    sign matrices of the linearized objective, ``restarts`` seeded random
    restarts); every evaluated ratio is a true lower bound.
    ``certified_upper`` is rigorous, and everything downstream that needs
    validity (Hoeffding-type constants) consumes the certified value only.
    """
    s = state_matrix(sigma)
    d = channel.dim
    q = centered_basis(s)
    m = superoperator_matrix(channel).matrix
    phi_f = q.conj().T @ m @ q
    eye_f = np.eye(phi_f.shape[0])
    try:
        inv_f = np.linalg.solve(eye_f - phi_f, eye_f)
    except np.linalg.LinAlgError as exc:
        raise HypothesisError("Id - phi is singular on the centered subspace") from exc

    certified = _certified_sup_norm_chain(phi_f, inv_f, d, max_terms)

    n_full = q @ inv_f @ q.conj().T  # acts as (Id-phi)^(-1) P_F in vectorized form
    eye_d = np.eye(d)

    def center(x: np.ndarray) -> np.ndarray:
        return x - (np.trace(s @ x) / np.trace(s)) * eye_d

    def ratio(x: np.ndarray) -> float:
        nx = uniform_norm(x)
        if nx < 1e-14:
            return 0.0
        y = unvec(n_full @ vec(x), d)
        return uniform_norm(y) / nx

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        x = _hermitize(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
        x = center(x)
        for _ in range(iterations):
            best = max(best, ratio(x))
            y = _hermitize(unvec(n_full @ vec(x), d))
            w, u = np.linalg.eigh(y)
            k = int(np.argmax(np.abs(w)))
            lead = np.outer(u[:, k], u[:, k].conj()) * np.sign(w[k])
            g = _hermitize(unvec(n_full.conj().T @ vec(lead), d))
            x_new = center(_sign_matrix(g))
            if uniform_norm(x_new - x) < 1e-12:
                break
            x = x_new
        best = max(best, ratio(x))
    # both bracket the same quantity; rounding can make them cross at the
    # fully degenerate point where the norm is exactly 1
    lower = min(best, certified)
    return PseudoresolventNorm(lower_estimate=lower, certified_upper=certified)


def phi_power_norms(channel: KrausChannel, sigma, j_max: int) -> list[float]:
    """Certified upper bounds on || phi^j |F ||_inf for j = 0..j_max."""
    s = state_matrix(sigma)
    q = centered_basis(s)
    m = superoperator_matrix(channel).matrix
    phi_f = q.conj().T @ m @ q
    root_d = float(np.sqrt(channel.dim))
    out = [1.0]
    power = np.eye(phi_f.shape[0], dtype=complex)
    for _ in range(j_max):
        power = phi_f @ power
        out.append(min(1.0, root_d * float(np.linalg.norm(power, 2))))
    return out


def poisson_solve(channel: KrausChannel, f_target, sigma,
                  center_tol: float = 1e-9, residual_tol: float = 1e-10,
                  certified_upper: float | None = None) -> np.ndarray:
    """Centered solution of (Id - phi)(A) = F on F = {tr(sigma x) = 0}.

    The right-hand side must already be centered; the solution satisfies
    tr(sigma A) = 0 and, when ``certified_upper`` is passed, the norm bound
    ||A|| <= certified_upper * ||F|| is verified.
    """
    s = state_matrix(sigma)
    f = as_complex_matrix(f_target, channel.dim)
    scale = max(1.0, float(np.max(np.abs(f))))
    centering = abs(complex(np.trace(s @ f)))
    if centering > center_tol * scale:
        raise ValueError(
            f"right-hand side is not centered: |tr(sigma F)| = {centering:.3e}")
    q = centered_basis(s)
    m = superoperator_matrix(channel).matrix
    phi_f = q.conj().T @ m @ q
    system = np.eye(phi_f.shape[0]) - phi_f
    singular_values = np.linalg.svd(system, compute_uv=False)
    if singular_values[-1] <= 1e-10 * max(singular_values[0], 1.0):
        raise HypothesisError(
            "channel is reducible: Id - phi is singular on the centered subspace")
    z = np.linalg.solve(system, q.conj().T @ vec(f))
    a = unvec(q @ z, channel.dim)
    if is_selfadjoint(f, 1e-10):
        a = _hermitize(a)
    residual = float(np.max(np.abs((a - channel.heisenberg(a)) - f)))
    if residual > residual_tol * scale:
        raise HypothesisError(
            f"Poisson residual {residual:.3e} exceeds tolerance; channel near-reducible")
    if certified_upper is not None:
        bound = certified_upper * uniform_norm(f) + 1e-12
        if uniform_norm(a) > bound:
            raise HypothesisError(
                f"solution norm {uniform_norm(a):.6e} exceeds certified bound {bound:.6e}")
    return a


# ---------------------------------------------------------------------------
# tilted transition operators
# ---------------------------------------------------------------------------

def deformed_channel(channel: KrausChannel, f, u: float) -> KrausChannel:
    """Tilted family with Kraus operators exp(u f(i) / 2) V_i.

    Completely positive but not trace preserving for u != 0 (flagged through
    ``is_channel``); at u = 0 this is the original family.
    """
    fv = observation_vector(f, channel.labels)
    ops = [np.exp(0.5 * u * fi) * v for fi, v in zip(fv, channel.kraus)]
    return KrausChannel(ops, channel.labels, expect_channel=False)


def spectral_radius_deformed(channel: KrausChannel, f, u: float, sigma) -> float:
    """Spectral radius of psi_u = (phi_u)_dagger phi_u; equals 1 at u = 0."""
    s = state_matrix(sigma)
    phi_u = deformed_channel(channel, f, u)
    m_u = superoperator_matrix(phi_u).matrix
    m_dag = kms_adjoint(Superoperator(channel.dim, m_u), s).matrix
    eigs = np.linalg.eigvals(m_dag @ m_u)
    return float(np.max(np.abs(eigs)))


# ---------------------------------------------------------------------------
# invariant-subspace decomposition of positive-recurrent channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvariantDecomposition:
    """Orthogonal invariant blocks with irreducible restricted channels."""

    projections: tuple[np.ndarray, ...]
    isometries: tuple[np.ndarray, ...]
    restricted_channels: tuple[KrausChannel, ...]
    block_states: tuple[DensityMatrix, ...]
    commutation_residual: float

    @property
    def blocks(self) -> int:
        return len(self.projections)

    def weights(self, rho) -> np.ndarray:
        """lambda_j(rho) = tr(p_j rho)."""
        r = state_matrix(rho)
        return np.asarray([float(np.trace(p @ r).real) for p in self.projections])

    def block_state(self, rho, j: int) -> np.ndarray:
        """Compression of rho to block j, renormalized (in block coordinates)."""
        u = self.isometries[j]
        comp = u.conj().T @ state_matrix(rho) @ u
        tr = float(np.trace(comp).real)
        if tr <= 0.0:
            raise ValueError(f"state has no weight on block {j}")
        return comp / tr


def _spectral_projector_at_one(m: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Spectral projector onto the eigenvalue-1 group, along the complement."""
    t, z, sdim = sla.schur(m, output="complex", sort=lambda lam: abs(lam - 1.0) < tol)
    if sdim == 0:
        raise HypothesisError("no eigenvalue 1: map is not trace preserving")
    if sdim == m.shape[0]:
        return np.eye(m.shape[0], dtype=complex)
    t11, t12, t22 = t[:sdim, :sdim], t[:sdim, sdim:], t[sdim:, sdim:]
    r = sla.solve_sylvester(t11, -t22, t12)
    p_t = np.zeros_like(m)
    p_t[:sdim, :sdim] = np.eye(sdim)
    p_t[:sdim, sdim:] = r
    return z @ p_t @ z.conj().T


def faithful_fixed_point(channel: KrausChannel, tol: float = TAU_PSD) -> np.ndarray:
    """A full-rank fixed state of the predual, via the Cesaro limit of 1/d.

    Raises :class:`HypothesisError` ("positive recurrence fails") when no
    faithful invariant state exists.
    """
    m_s = superoperator_matrix(channel, picture="schrodinger").matrix
    p1 = _spectral_projector_at_one(m_s)
    candidate = _hermitize(unvec(p1 @ vec(np.eye(channel.dim) / channel.dim), channel.dim))
    tr = float(np.trace(candidate).real)
    if abs(tr) < 1e-12:
        raise HypothesisError("positive recurrence fails")
    candidate = candidate / tr
    if float(np.min(np.linalg.eigvalsh(candidate))) <= tol:
        raise HypothesisError("positive recurrence fails")
    return candidate


def _group_eigenvalues(w: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.argsort(w)
    groups, current = [], [order[0]]
    for idx in order[1:]:
        if w[idx] - w[current[-1]] <= tol:
            current.append(idx)
        else:
            groups.append(np.asarray(current))
            current = [idx]
    groups.append(np.asarray(current))
    return groups


def _split_once(channel: KrausChannel, seed: int, tol: float) -> list[np.ndarray]:
    """Isometries of the invariant blocks found from one random fixed point."""
    m_h = superoperator_matrix(channel).matrix
    basis = _null_space(m_h - np.eye(m_h.shape[0]))
    if basis.shape[1] <= 1:
        return [np.eye(channel.dim, dtype=complex)]
    rng = np.random.default_rng(seed)
    y = np.zeros((channel.dim, channel.dim), dtype=complex)
    for col in range(basis.shape[1]):
        b = unvec(basis[:, col], channel.dim)
        y += rng.standard_normal() * _hermitize(b) + rng.standard_normal() * _hermitize(1j * b)
    w, u = np.linalg.eigh(y)
    scale = max(1.0, float(np.max(np.abs(w))))
    groups = _group_eigenvalues(w, tol * scale)
    if len(groups) == 1:
        # collided eigenvalues: retry deterministically with the next seed
        return _split_once(channel, seed + 1, tol)
    return [u[:, g] for g in groups]


def _restrict(channel: KrausChannel, isometry: np.ndarray) -> KrausChannel:
    ops = [isometry.conj().T @ v @ isometry for v in channel.kraus]
    return KrausChannel(ops, channel.labels, expect_channel=False)


def decompose_invariant_subspaces(channel: KrausChannel, tol: float = TAU_DEC,
                                  seed: int = 11) -> InvariantDecomposition:
    """Decompose a positive-recurrent channel into irreducible invariant blocks.

    Fixed points of the Heisenberg action span the invariant projections when
    a faithful invariant state exists; a random selfadjoint fixed point is
    spectrally split at resolution ``tol`` and the blocks are refined
    recursively until each restricted channel is irreducible.
    """
    faithful_fixed_point(channel, TAU_PSD)  # raises if positive recurrence fails

    blocks: list[np.ndarray] = []

    def refine(isometry: np.ndarray, sub: KrausChannel, depth: int):
        if depth > channel.dim:
            raise HypothesisError("invariant-subspace refinement failed to terminate")
        parts = _split_once(sub, seed + depth, tol)
        if len(parts) == 1:
            blocks.append(isometry)
            return
        for part in parts:
            refine(isometry @ part, _restrict(sub, part), depth + 1)

    refine(np.eye(channel.dim, dtype=complex), channel, 0)
    blocks.sort(key=lambda u: (int(np.argmax(np.abs(u[:, 0]) > 1e-8)), -u.shape[1]))

    projections, restricted, states = [], [], []
    residual = 0.0
    for u in blocks:
        p = u @ u.conj().T
        for v in channel.kraus:
            residual = max(residual, float(np.max(np.abs(v @ p - p @ v))))
        sub = _restrict(channel, u)
        evidence = is_irreducible(sub)
        if not evidence.irreducible:
            raise HypothesisError("restricted block is not irreducible after refinement")
        projections.append(p)
        restricted.append(sub)
        states.append(invariant_state(sub))
    total = sum(projections)
    if float(np.max(np.abs(total - np.eye(channel.dim)))) > 1e-8:
        raise HypothesisError("block projections do not resolve the identity")
    if residual > tol:
        raise HypothesisError(
            f"commutation residual {residual:.3e} exceeds {tol:g}; blocks not invariant")
    return InvariantDecomposition(projections=tuple(projections),
                                  isometries=tuple(blocks),
                                  restricted_channels=tuple(restricted),
                                  block_states=tuple(states),
                                  commutation_residual=residual)
