"""Pointwise Gauss-map functionals of a graph: singular values, the
area-decreasing margin functionals eta/eta1, adapted frames, second
fundamental form, and the closed-form curvature contraction for
constant-curvature products.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import DomainError, NumericError, ValidationError
from .field import DifferentialData, MapField
from .manifolds import MetricData, ProductSpec

_CLAMP = 1e-14


@dataclass(frozen=True)
class SingularData:
    """Singular values of the differential with respect to the factor metrics.

    lambdas holds lambda1 >= lambda2 >= 0 (at most two are nonzero since the
    target is two-dimensional); det_sign records the orientation of the
    restriction of df to its top singular plane (+1 / -1 / 0 when rank < 2).
    """

    lambdas: tuple[float, float]
    det_sign: int

    @property
    def product(self) -> float:
        return self.lambdas[0] * self.lambdas[1]


@dataclass(frozen=True)
class GaussFunctionals:
    """Scalar functionals of the singular values.

    eta1 = 1/sqrt((1+l1^2)(1+l2^2)) is the cosine-type projection weight of
    the tangent plane onto the domain factor; eta = (1 - l1 l2) * eta1 is the
    strict area-decreasing margin (positive exactly when every 2-plane has
    its area contracted); comass_pullback = l1 l2 is the comass of the
    pulled-back target area form.
    """

    eta: float
    eta1: float
    comass_pullback: float
    product: float

    @property
    def area_decreasing(self) -> bool:
        return self.eta > 0.0


@dataclass(frozen=True)
class AdaptedFrame:
    """Singular-value-adapted orthonormal frames at a point of the graph.

    a_dom[i] are domain-factor vectors (chart components, orthonormal for
    g1) diagonalizing the differential; a_tgt[j] target vectors (orthonormal
    basis components) with df(a_dom[i]) = lambda_i a_tgt[i].  e_tan / e_nor
    are the induced tangent and normal frames of the graph, stored as
    (coefficients on a_dom | coefficients on a_tgt) pairs:
        e_tan[i] = (a_dom[i] + lambda_i a_tgt[i]) / sqrt(1 + lambda_i^2)
        e_nor[j] = (a_tgt[j] - lambda_j a_dom[j]) / sqrt(1 + lambda_j^2)
    """

    lambdas: tuple[float, float]
    a_dom: np.ndarray          # (n, n) chart components, rows are vectors
    a_tgt: np.ndarray          # (2, 2) orthonormal-basis components
    e_tan_dom: np.ndarray      # (n, n) domain part of tangent frame
    e_tan_tgt: np.ndarray      # (n, 2) target part of tangent frame
    e_nor_dom: np.ndarray      # (2, n)
    e_nor_tgt: np.ndarray      # (2, 2)


@dataclass(frozen=True)
class SecondFormData:
    """Second fundamental form of the graph in the adapted frames.

    h[alpha, i, k] with alpha in {0, 1} indexing the normal frame and i, k
    the adapted tangent frame; H are the mean-curvature components on the
    normal frame; A_norm_sq = sum h^2.
    """

    h: np.ndarray
    H: np.ndarray
    A_norm_sq: float

    @property
    def H_norm_sq(self) -> float:
        return float(np.dot(self.H, self.H))


def _canonical_sign(vec: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(vec) > 1e-13 * max(1.0, np.max(np.abs(vec))))
    if len(nz) and vec[nz[0]] < 0:
        return -vec
    return vec


def singular_values(diff: DifferentialData, g1: MetricData, g2=None) -> SingularData:
    """Singular values of df relative to the domain metric g1 and target
    inner product g2 (identity when the df columns are already orthonormal).

    The squared values are the eigenvalues of the pullback form relative to
    g1; eigenvalues within 1e-14 of zero are clamped to exactly 0.
    """
    df = np.asarray(diff.df, dtype=float)
    if not np.all(np.isfinite(df)):
        raise NumericError("non-finite differential")
    if g2 is None:
        g2 = np.eye(df.shape[1])
    g2 = np.asarray(g2, dtype=float)
    # Nonzero eigenvalues of g1^{-1} (df g2 df^T) equal those of the 2x2
    # target-side form K = g2^{1/2} df^T g1^{-1} df g2^{1/2}.
    l2t = np.linalg.cholesky(g2)
    k = l2t.T @ (df.T @ g1.g_inv @ df) @ l2t
    mean = 0.5 * (k[0, 0] + k[1, 1])
    det = k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]
    disc = sqrt(max(mean * mean - det, 0.0))
    lam_sq = [mean + disc, max(mean - disc, 0.0)]
    lam_sq = [0.0 if v <= _CLAMP else v for v in lam_sq]
    lams = (float(sqrt(lam_sq[0])), float(sqrt(lam_sq[1])))
    if lams[1] == 0.0:
        sign = 0
    elif df.shape[0] == 2:
        l1 = np.linalg.cholesky(g1.g)
        df_orth = np.linalg.solve(l1, df @ l2t)
        sign = int(np.sign(np.linalg.det(df_orth)))
    else:
        frame = adapted_frame(diff, g1, g2)
        b = np.stack([frame.a_tgt[0], frame.a_tgt[1]])
        sign = int(np.sign(np.linalg.det(b)))
    return SingularData(lambdas=lams, det_sign=sign)


def gauss_functionals(sv: SingularData) -> GaussFunctionals:
    l1, l2 = sv.lambdas
    denom = sqrt((1.0 + l1 * l1) * (1.0 + l2 * l2))
    prod = l1 * l2
    return GaussFunctionals(
        eta=(1.0 - prod) / denom,
        eta1=1.0 / denom,
        comass_pullback=prod,
        product=prod,
    )


def star_omega(sv: SingularData, omega_value: float) -> float:
    """Evaluate the n-form family member parameterized by omega_value on the
    graph tangent plane: (1 - l1 l2 omega) / sqrt((1+l1^2)(1+l2^2)).

    omega_value must lie in [-1, 1] (comass-one parameterization); the
    minimum over {-1, +1} reproduces eta.
    """
    if abs(omega_value) > 1.0 + 1e-15:
        raise DomainError(f"omega_value {omega_value!r} outside [-1, 1]")
    l1, l2 = sv.lambdas
    denom = sqrt((1.0 + l1 * l1) * (1.0 + l2 * l2))
    return (1.0 - l1 * l2 * omega_value) / denom


def adapted_frame(diff: DifferentialData, g1: MetricData, g2=None) -> AdaptedFrame:
    """Orthonormal frames adapted to the singular value decomposition of df.

    Degenerate singular values are resolved deterministically: eigenvectors
    of the pullback form ordered by eigenvalue, signs canonicalized on the
    first significant component.
    """
    df = np.asarray(diff.df, dtype=float)
    n = df.shape[0]
    if g2 is None:
        g2 = np.eye(2)
    g2 = np.asarray(g2, dtype=float)
    l2t = np.linalg.cholesky(g2)
    df_t = df @ l2t  # target components now orthonormal
    l1 = np.linalg.cholesky(g1.g)
    # Whiten the domain: rows of df in a g1-orthonormal basis.
    df_w = np.linalg.solve(l1, df_t)
    pull = df_w @ df_w.T
    w, v = np.linalg.eigh(pull)
    order = np.argsort(w)[::-1]
    w = w[order]
    v = v[:, order]
    lam_sq = np.where(w <= _CLAMP, 0.0, w)
    lams = np.sqrt(lam_sq)
    a_whit = np.stack([_canonical_sign(v[:, i]) for i in range(n)])
    a_dom = np.linalg.solve(l1.T, a_whit.T).T  # chart components, g1-orthonormal
    a_tgt = np.zeros((2, 2))
    for i in range(2):
        if lams[i] > 1e-12:
            a_tgt[i] = (a_whit[i] @ df_w) / lams[i]
    # Complete the target basis deterministically where the rank is short.
    if lams[0] <= 1e-12:
        a_tgt[0] = np.array([1.0, 0.0])
    if lams[1] <= 1e-12 or abs(np.dot(a_tgt[0], a_tgt[1])) > 1e-8:
        a_tgt[1] = np.array([-a_tgt[0][1], a_tgt[0][0]])
    lam12 = (float(lams[0]), float(lams[1]))
    norm_t = np.sqrt(1.0 + lam_sq[:2])
    e_tan_dom = a_dom.copy()
    e_tan_tgt = np.zeros((n, 2))
    for i in range(min(2, n)):
        e_tan_dom[i] = a_dom[i] / norm_t[i]
        e_tan_tgt[i] = lams[i] * a_tgt[i] / norm_t[i]
    e_nor_dom = np.stack([-lams[j] * a_dom[j] / norm_t[j] for j in range(2)])
    e_nor_tgt = np.stack([a_tgt[j] / norm_t[j] for j in range(2)])
    return AdaptedFrame(
        lambdas=lam12,
        a_dom=a_dom,
        a_tgt=a_tgt,
        e_tan_dom=e_tan_dom,
        e_tan_tgt=e_tan_tgt,
        e_nor_dom=e_nor_dom,
        e_nor_tgt=e_nor_tgt,
    )


def second_fundamental_form(fieldmap: MapField, node: int, product: ProductSpec) -> SecondFormData:
    """Second fundamental form of the graph immersion at one node, expressed
    in the adapted frames.

    Assembles the ambient covariant Hessian of the immersion (chart second
    derivatives plus Christoffel corrections of both factors), removes the
    graph-tangential part, and projects onto the adapted normal frame.
    """
    from .analysis import FieldAnalysis  # local import to avoid a cycle

    ana = FieldAnalysis(fieldmap, product)
    return ana.second_form_at(node)


@dataclass(frozen=True)
class CurvatureTerms:
    """Closed-form curvature contractions for the constant-curvature product.

    r_values[i] is the contraction sum R_{alpha k k i} for the normal
    direction paired with singular direction i (weight lambda_i/(1+lambda_i^2));
    eta1_bracket[i] is the same bracket weighted by lambda_i^2/(1+lambda_i^2),
    the form entering the inequality satisfied by eta1; split[i] rewrites the
    shared bracket as
        (k1-k2)/2 (n-1) + (k1+k2)/2 (sum_{j!=i} 2/(1+lambda_j^2) + 1 - n).
    """

    r_values: tuple[float, float]
    eta1_terms: tuple[float, float]
    split: tuple[float, float]

    @property
    def r_total(self) -> float:
        return self.r_values[0] + self.r_values[1]

    @property
    def eta1_total(self) -> float:
        return self.eta1_terms[0] + self.eta1_terms[1]


def curvature_term_closed(sv: SingularData, k1: float, k2: float, n: int) -> CurvatureTerms:
    if n < 2:
        raise ValidationError("domain dimension must be at least 2")
    lams = np.zeros(n)
    lams[0], lams[1] = sv.lambdas
    a = 1.0 / (1.0 + lams * lams)
    r_vals = []
    eta1_vals = []
    split_vals = []
    for i in range(2):
        s = float(np.sum(a) - a[i])
        bracket = k1 * s + k2 * (1.0 - n + s)
        split = 0.5 * (k1 - k2) * (n - 1) + 0.5 * (k1 + k2) * (2.0 * s + 1.0 - n)
        r_vals.append(lams[i] * a[i] * bracket)
        eta1_vals.append(lams[i] * lams[i] * a[i] * bracket)
        split_vals.append(split)
    return CurvatureTerms(
        r_values=(r_vals[0], r_vals[1]),
        eta1_terms=(eta1_vals[0], eta1_vals[1]),
        split=(split_vals[0], split_vals[1]),
    )


def build_frames_from_lambdas(lams, n: int):
    """Synthetic adapted frames over R^n x R^2 for given singular values.

    Uses the coordinate bases a_i = e_i, a_{n+j} = f_j; returns (tangent
    frame rows, normal frame rows) as component vectors in R^{n+2}.
    """
    l = np.zeros(n)
    l[0], l[1] = lams
    tan = np.zeros((n, n + 2))
    for i in range(n):
        norm = np.sqrt(1.0 + l[i] * l[i])
        tan[i, i] = 1.0 / norm
        if i < 2:
            tan[i, n + i] = l[i] / norm
    nor = np.zeros((2, n + 2))
    for j in range(2):
        norm = np.sqrt(1.0 + l[j] * l[j])
        nor[j, n + j] = 1.0 / norm
        nor[j, j] = -l[j] / norm
    return tan, nor
