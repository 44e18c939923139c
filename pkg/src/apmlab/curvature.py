"""Pointwise rank-4 laboratory: curvature-like tensors and Riemannian P-tensors.

A curvature-like tensor L satisfies the pair antisymmetries and the first
Bianchi identity,

    L(x,y,z,w) = -L(y,x,z,w) = -L(x,y,w,z),
    L(x,y,z,w) + L(y,z,x,w) + L(z,x,y,w) = 0,

and it is a Riemannian P-tensor when additionally L(x,y,Pz,Pw) = L(x,y,z,w).
In dimension 4 every Riemannian P-tensor is a combination of pi1+pi2 and pi3
with coefficients given by its scalar curvatures; the helpers here build the
pi tensors, contract Ricci-type invariants, and test the identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .report import CheckReport
from .structure import adapted_orthonormal_basis, basis_residuals
from .tensors import DEFAULT_TOL, PointStructure, frob, random_tensor4

PROJECTION_MAX_ITER = 200
PROJECTION_THRESHOLD = 1e-12


class ProjectionError(RuntimeError):
    """Raised when the P-tensor projection fails to converge."""


@dataclass
class CurvatureInvariants:
    """Ricci tensor, scalar curvature and their P-twisted companions."""

    rho: np.ndarray
    tau: float
    rho_star: np.ndarray
    tau_star: float


def curvature_like_residuals(l: np.ndarray) -> dict[str, float]:
    bianchi = l + np.einsum("jkil->ijkl", l) + np.einsum("kijl->ijkl", l)
    return {
        "first_pair_skew": frob(l + np.einsum("jikl->ijkl", l)),
        "last_pair_skew": frob(l + np.einsum("ijlk->ijkl", l)),
        "first_bianchi": frob(bianchi),
    }


def is_curvature_like(l: np.ndarray, tol: float = DEFAULT_TOL) -> CheckReport:
    report = CheckReport(name="curvature_like", tol=tol)
    report.residuals.update(curvature_like_residuals(l))
    return report.finalize()


def p_invariance_residual(ps: PointStructure, l: np.ndarray) -> float:
    """Residual of L(x,y,Pz,Pw) = L(x,y,z,w)."""
    twisted = np.einsum("ijab,ak,bl->ijkl", l, ps.p, ps.p)
    return frob(twisted - l)


def is_p_tensor(ps: PointStructure, l: np.ndarray, tol: float = DEFAULT_TOL) -> CheckReport:
    report = CheckReport(name="p_tensor", tol=tol)
    report.residuals.update(curvature_like_residuals(l))
    report.residuals["p_invariance"] = p_invariance_residual(ps, l)
    return report.finalize()


def p_slot_identities(ps: PointStructure, l: np.ndarray,
                      tol: float = DEFAULT_TOL) -> CheckReport:
    """The five P-slot-moving equalities valid for every Riemannian P-tensor.

    Precondition: L passes the P-tensor test; otherwise raises ValueError.
    """
    if not is_p_tensor(ps, l, tol=max(tol, 1e-8) * max(1.0, frob(l))).passed:
        raise ValueError("prerequisite failed: L is not a Riemannian P-tensor")
    p = ps.p
    one_p = [
        np.einsum("ajkl,ai->ijkl", l, p),
        np.einsum("ibkl,bj->ijkl", l, p),
        np.einsum("ijcl,ck->ijkl", l, p),
        np.einsum("ijkd,dl->ijkl", l, p),
    ]
    report = CheckReport(name="p_slot_identities", tol=tol)
    report.residuals["middle_pair_p"] = frob(
        np.einsum("ibcl,bj,ck->ijkl", l, p, p) - l
    )
    report.residuals["first_pair_p"] = frob(
        np.einsum("abkl,ai,bj->ijkl", l, p, p) - l
    )
    for idx in range(3):
        key = f"single_p_slots_{idx + 1}{idx + 2}"
        report.residuals[key] = frob(one_p[idx] - one_p[idx + 1])
    return report.finalize()


def psi1(ps: PointStructure, s: np.ndarray) -> np.ndarray:
    """psi1(S)(x,y,z,w) = g(y,z)S(x,w) - g(x,z)S(y,w) + S(y,z)g(x,w) - S(x,z)g(y,w).

    Curvature-like exactly when S is symmetric.
    """
    g = ps.g
    return (
        np.einsum("jk,il->ijkl", g, s)
        - np.einsum("ik,jl->ijkl", g, s)
        + np.einsum("jk,il->ijkl", s, g)
        - np.einsum("ik,jl->ijkl", s, g)
    )


def psi2(ps: PointStructure, s: np.ndarray) -> np.ndarray:
    """psi2(S)(x,y,z,w) = psi1(S)(x,y,Pz,Pw); curvature-like iff S(x,Py) = S(y,Px)."""
    return np.einsum("ijab,ak,bl->ijkl", psi1(ps, s), ps.p, ps.p)


def psi_preconditions(ps: PointStructure, s: np.ndarray) -> dict[str, float]:
    """Residuals of the conditions under which psi1(S) / psi2(S) are curvature-like."""
    sp = s @ ps.p
    return {
        "psi1_symmetric": frob(s - s.T),
        "psi2_p_compatible": frob(sp - sp.T),
    }


def pi_tensors(ps: PointStructure) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The invariant tensors pi1 = psi1(g)/2, pi2 = psi2(g)/2, pi3 = psi1(g~)."""
    pi1 = 0.5 * psi1(ps, ps.g)
    pi2 = 0.5 * psi2(ps, ps.g)
    pi3 = psi1(ps, ps.g_assoc)
    return pi1, pi2, pi3


def curvature_invariants(ps: PointStructure, l: np.ndarray) -> CurvatureInvariants:
    """Ricci contractions rho(y,z) = g^{il} L(e_i,y,z,e_l) and their P-twists."""
    rho = np.einsum("il,ijkl->jk", ps.g_inv, l)
    tau = float(np.einsum("jk,jk->", ps.g_inv, rho))
    rho_star = np.einsum("il,ijkm,ml->jk", ps.g_inv, l, ps.p)
    tau_star = float(np.einsum("jk,jk->", ps.g_inv, rho_star))
    return CurvatureInvariants(rho=rho, tau=tau, rho_star=rho_star, tau_star=tau_star)


def _curvature_like_projection(t: np.ndarray) -> np.ndarray:
    # Antisymmetrize both index pairs, symmetrize pair exchange, then remove
    # the totally antisymmetric (cyclic) part; the result satisfies the pair
    # skews and the first Bianchi identity exactly.
    t = 0.25 * (
        t
        - np.einsum("jikl->ijkl", t)
        - np.einsum("ijlk->ijkl", t)
        + np.einsum("jilk->ijkl", t)
    )
    t = 0.5 * (t + np.einsum("klij->ijkl", t))
    cyc = t + np.einsum("jkil->ijkl", t) + np.einsum("kijl->ijkl", t)
    return t - cyc / 3.0


def random_curvature_like(dim: int, seed: int) -> np.ndarray:
    """Deterministic random curvature-like tensor (generally not a P-tensor)."""
    l = _curvature_like_projection(random_tensor4(dim, seed))
    norm = frob(l)
    return l / norm if norm > 1e-8 else l


def random_p_tensor(ps: PointStructure, seed: int,
                    max_iter: int = PROJECTION_MAX_ITER,
                    threshold: float = PROJECTION_THRESHOLD) -> np.ndarray:
    """Random Riemannian P-tensor via alternating subspace projections.

    Alternates the exact curvature-like projection with averaging against the
    P-twist until the joint residual drops below ``threshold``; the constraint
    sets are linear subspaces, so the iteration converges.  Output is scaled
    to unit Frobenius norm.
    """
    t = random_tensor4(ps.dim, seed)
    for _ in range(max_iter):
        t = _curvature_like_projection(t)
        t = 0.5 * (t + np.einsum("ijab,ak,bl->ijkl", t, ps.p, ps.p))
        residuals = curvature_like_residuals(t)
        residuals["p_invariance"] = p_invariance_residual(ps, t)
        if max(residuals.values()) < threshold * max(1.0, frob(t)):
            norm = frob(t)
            return t / norm if norm > 1e-8 else t
    raise ProjectionError(
        f"P-tensor projection did not converge in {max_iter} iterations (seed {seed})"
    )


def decompose_dim4(ps: PointStructure, l: np.ndarray) -> tuple[float, float, float]:
    """Reconstruct a 4-dimensional L from its scalar curvatures.

    Returns (tau, tau_star, residual) where the residual measures
    | L - {tau (pi1+pi2) + tau_star pi3} / 8 |; it vanishes exactly when L is
    a Riemannian P-tensor.
    """
    if ps.dim != 4:
        raise ValueError("decomposition by scalar curvatures requires dimension 4")
    inv = curvature_invariants(ps, l)
    pi1, pi2, pi3 = pi_tensors(ps)
    rebuilt = (inv.tau * (pi1 + pi2) + inv.tau_star * pi3) / 8.0
    return inv.tau, inv.tau_star, frob(l - rebuilt)


def sectional_curvatures(ps: PointStructure, l: np.ndarray,
                         basis: np.ndarray,
                         tol: float = 1e-8) -> tuple[float, float]:
    """Sectional curvature of the {E1, E2} plane and its P-associated companion.

    ``basis`` must be an adapted orthonormal basis (columns E_a then PE_a).
    """
    res = basis_residuals(ps, basis)
    if max(res.values()) > tol:
        raise ValueError(f"basis is not adapted orthonormal: {res}")
    e1, e2, pe2 = basis[:, 0], basis[:, 1], basis[:, ps.n + 1]
    nu = float(np.einsum("ijkl,i,j,k,l->", l, e1, e2, e1, e2))
    nu_star = float(np.einsum("ijkl,i,j,k,l->", l, e1, e2, e1, pe2))
    return nu, nu_star


def almost_einstein_check(ps: PointStructure, l: np.ndarray,
                          tol: float = DEFAULT_TOL) -> CheckReport:
    """Einstein-type shape of the Ricci tensor of a dim-4 Riemannian P-tensor.

    Checks rho(L) = {tau g + tau_star g~} / 4, that all totally real basic
    2-planes share one sectional curvature, and that invariant basic 2-planes
    have zero curvature.
    """
    if ps.dim != 4:
        raise ValueError("almost-Einstein check requires dimension 4")
    if not is_p_tensor(ps, l, tol=1e-8 * max(1.0, frob(l))).passed:
        raise ValueError("prerequisite failed: L is not a Riemannian P-tensor")
    inv = curvature_invariants(ps, l)
    expected = 0.25 * (inv.tau * ps.g + inv.tau_star * ps.g_assoc)

    basis = adapted_orthonormal_basis(ps)
    e1, e2, pe1, pe2 = basis.T
    planes = [(e1, e2), (e1, pe2), (pe1, e2), (pe1, pe2)]
    curvatures = [
        float(np.einsum("ijkl,i,j,k,l->", l, x, y, x, y)) for x, y in planes
    ]
    invariant = [
        abs(float(np.einsum("ijkl,i,j,k,l->", l, x, y, x, y)))
        for x, y in [(e1, pe1), (e2, pe2)]
    ]

    report = CheckReport(name="almost_einstein", tol=tol)
    report.residuals["ricci_form"] = frob(inv.rho - expected)
    report.residuals["totally_real_spread"] = max(curvatures) - min(curvatures)
    report.residuals["invariant_plane_curvature"] = max(invariant)
    report.scalars.update(
        {"tau": inv.tau, "tau_star": inv.tau_star, "nu": curvatures[0]}
    )
    return report.finalize()


def ab_forms(x: np.ndarray, y: np.ndarray, basis: np.ndarray) -> tuple[float, float]:
    """The two antisymmetric coordinate 2-forms of the dim-4 canonical shape.

    Vectors are re-expressed in the adapted basis (E1, E2, PE1, PE2); then
    a(x,y) = x1 y2 + x3 y4 - x2 y1 - x4 y3 and
    b(x,y) = x1 y4 + x3 y2 - x2 y3 - x4 y1.
    """
    if basis.shape != (4, 4):
        raise ValueError("the a/b forms are defined for dimension 4 only")
    cx = np.linalg.solve(basis, np.asarray(x, dtype=float))
    cy = np.linalg.solve(basis, np.asarray(y, dtype=float))
    a = cx[0] * cy[1] + cx[2] * cy[3] - cx[1] * cy[0] - cx[3] * cy[2]
    b = cx[0] * cy[3] + cx[2] * cy[1] - cx[1] * cy[2] - cx[3] * cy[0]
    return float(a), float(b)
