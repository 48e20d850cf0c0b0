"""Vectorized per-node analysis of a whole field: induced metric, singular
values, margin functionals, second fundamental form, and adapted-frame data.

This is the performance path behind the monitors and verifiers; the pointwise
operations in `gauss` provide the independent small-matrix reference it is
tested against.
"""
from __future__ import annotations

import numpy as np

from .errors import FlowBreakdownError
from .field import MapField, field_derivatives, sphere_tangent_basis
from .gauss import SecondFormData
from .manifolds import FLAT_TORUS, ROUND_SPHERE, ProductSpec

_CLAMP = 1e-14


class FieldAnalysis:
    """Lazy per-node geometric analysis of a map field.

    All arrays are indexed by flat node; quantities are computed on first
    access and cached.  The domain metrics of the supported factors are
    diagonal in their charts, which the computations exploit.
    """

    def __init__(self, fieldmap: MapField, product: ProductSpec):
        self.field = fieldmap
        self.product = product
        self.grid = fieldmap.grid
        self.nd = fieldmap.grid.ndim
        self.n_nodes = fieldmap.grid.nnodes
        self._cache: dict = {}

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # ------------------------------------------------------------------ #
    # metric / first-order data
    # ------------------------------------------------------------------ #

    @property
    def deriv(self):
        return self._get("deriv", lambda: field_derivatives(self.field))

    @property
    def g1_diag(self) -> np.ndarray:
        """(nd, N) diagonal entries of the domain chart metric."""

        def build():
            if self.grid.spec.kind == FLAT_TORUS:
                return np.ones((self.nd, self.n_nodes))
            r_sq = 1.0 / self.grid.spec.curvature
            theta = self.grid.theta()
            return np.stack([np.full(self.n_nodes, r_sq), r_sq * np.sin(theta) ** 2])

        return self._get("g1_diag", build)

    @property
    def jac(self) -> np.ndarray:
        """(nd, N, C) full differential of the represented map (background
        included for torus targets; ambient components for sphere targets)."""

        def build():
            d1 = np.stack(self.deriv.d1)
            if self.field.target.kind == FLAT_TORUS and self.field.background is not None:
                d1 = d1 + self.field.background[:, None, :]
            return d1

        return self._get("jac", build)

    @property
    def tangent_basis(self):
        def build():
            if self.field.target.kind != ROUND_SPHERE:
                return None
            return sphere_tangent_basis(self.field.values, self.field.target.radius)

        return self._get("tangent_basis", build)

    @property
    def jac_orth(self) -> np.ndarray:
        """(nd, N, 2) differential with orthonormal target components."""

        def build():
            if self.field.target.kind == FLAT_TORUS:
                return self.jac
            t1, t2 = self.tangent_basis
            j = self.jac
            return np.stack(
                [
                    np.stack([np.sum(j[i] * t1, axis=1), np.sum(j[i] * t2, axis=1)], axis=1)
                    for i in range(self.nd)
                ]
            )

        return self._get("jac_orth", build)

    @property
    def metric(self) -> np.ndarray:
        """(nd, nd, N) induced chart metric g = g1 + pullback."""

        def build():
            j = self.jac
            g = np.empty((self.nd, self.nd, self.n_nodes))
            for i in range(self.nd):
                for k in range(i, self.nd):
                    dot = np.sum(j[i] * j[k], axis=1)
                    if i == k:
                        dot = dot + self.g1_diag[i]
                    g[i, k] = dot
                    g[k, i] = dot
            return g

        return self._get("metric", build)

    @property
    def det_metric(self) -> np.ndarray:
        def build():
            g = self.metric
            if self.nd == 2:
                return g[0, 0] * g[1, 1] - g[0, 1] * g[0, 1]
            a, b, c = g[0, 0], g[0, 1], g[0, 2]
            d, e = g[1, 1], g[1, 2]
            f = g[2, 2]
            return a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)

        return self._get("det_metric", build)

    @property
    def metric_inv(self) -> np.ndarray:
        def build():
            g = self.metric
            det = self.det_metric
            bad = ~(np.isfinite(det) & (det > 0.0))
            if np.any(bad):
                node = int(np.flatnonzero(bad)[0])
                raise FlowBreakdownError(
                    f"induced metric not positive definite at node {node}", node=node
                )
            inv = np.empty_like(g)
            if self.nd == 2:
                inv[0, 0] = g[1, 1] / det
                inv[1, 1] = g[0, 0] / det
                inv[0, 1] = inv[1, 0] = -g[0, 1] / det
            else:
                a, b, c = g[0, 0], g[0, 1], g[0, 2]
                d, e = g[1, 1], g[1, 2]
                f = g[2, 2]
                inv[0, 0] = (d * f - e * e) / det
                inv[0, 1] = inv[1, 0] = (c * e - b * f) / det
                inv[0, 2] = inv[2, 0] = (b * e - c * d) / det
                inv[1, 1] = (a * f - c * c) / det
                inv[1, 2] = inv[2, 1] = (b * c - a * e) / det
                inv[2, 2] = (a * d - b * b) / det
            return inv

        return self._get("metric_inv", build)

    @property
    def sqrt_det_metric(self) -> np.ndarray:
        return self._get("sqrt_det_metric", lambda: np.sqrt(self.det_metric))

    @property
    def det_g1(self) -> np.ndarray:
        return self._get("det_g1", lambda: np.prod(self.g1_diag, axis=0))

    # ------------------------------------------------------------------ #
    # singular values and margin functionals
    # ------------------------------------------------------------------ #

    @property
    def _whitened_pullback(self):
        """Domain-side pullback form in a g1-orthonormal basis: (nd, nd, N)."""

        def build():
            jw = self.jac_orth / np.sqrt(self.g1_diag)[:, :, None]
            p = np.empty((self.nd, self.nd, self.n_nodes))
            for i in range(self.nd):
                for k in range(i, self.nd):
                    p[i, k] = p[k, i] = np.sum(jw[i] * jw[k], axis=1)
            self._cache["_jac_whitened"] = jw
            return p

        return self._get("_whitened_pullback", build)

    @property
    def lambdas(self) -> np.ndarray:
        """(2, N) singular values, descending, clamped at zero."""

        def build():
            # The pullback has rank <= 2: its nonzero eigenvalues equal those
            # of the 2x2 target-side form K_ab = sum_i Jw[i,a] Jw[i,b].
            self._whitened_pullback
            jw = self._cache["_jac_whitened"]
            k00 = np.zeros(self.n_nodes)
            k01 = np.zeros(self.n_nodes)
            k11 = np.zeros(self.n_nodes)
            for i in range(self.nd):
                k00 += jw[i, :, 0] * jw[i, :, 0]
                k01 += jw[i, :, 0] * jw[i, :, 1]
                k11 += jw[i, :, 1] * jw[i, :, 1]
            mean = 0.5 * (k00 + k11)
            disc = np.sqrt(np.maximum(mean * mean - (k00 * k11 - k01 * k01), 0.0))
            lam_sq1 = mean + disc
            lam_sq2 = np.maximum(mean - disc, 0.0)
            lam_sq1 = np.where(lam_sq1 <= _CLAMP, 0.0, lam_sq1)
            lam_sq2 = np.where(lam_sq2 <= _CLAMP, 0.0, lam_sq2)
            return np.stack([np.sqrt(lam_sq1), np.sqrt(lam_sq2)])

        return self._get("lambdas", build)

    @property
    def product_lambda(self) -> np.ndarray:
        return self._get("product_lambda", lambda: self.lambdas[0] * self.lambdas[1])

    @property
    def eta1(self) -> np.ndarray:
        def build():
            l1, l2 = self.lambdas
            return 1.0 / np.sqrt((1.0 + l1 * l1) * (1.0 + l2 * l2))

        return self._get("eta1", build)

    @property
    def eta(self) -> np.ndarray:
        return self._get("eta", lambda: (1.0 - self.product_lambda) * self.eta1)

    @property
    def det_sign(self) -> np.ndarray:
        """(N,) orientation sign of the differential (2D domains)."""

        def build():
            if self.nd != 2:
                return np.zeros(self.n_nodes)
            self._whitened_pullback
            jw = self._cache["_jac_whitened"]
            det = jw[0, :, 0] * jw[1, :, 1] - jw[0, :, 1] * jw[1, :, 0]
            return np.sign(det)

        return self._get("det_sign", build)

    # ------------------------------------------------------------------ #
    # second fundamental form
    # ------------------------------------------------------------------ #

    @property
    def _gamma1(self):
        """Domain Christoffel data; None for flat domains."""

        def build():
            if self.grid.spec.kind == FLAT_TORUS:
                return None
            theta = self.grid.theta()
            s, c = np.sin(theta), np.cos(theta)
            return {"m_sc": -s * c, "cot": c / s}

        return self._get("_gamma1", build)

    @property
    def hessian(self) -> np.ndarray:
        """(nd, nd, N, C) covariant Hessian of the map along itself.

        Chart second derivatives minus domain Christoffel terms, plus the
        target-sphere correction that keeps the result tangent to the target.
        """

        def build():
            d2 = self.deriv.d2
            j = self.jac
            out = np.empty((self.nd, self.nd, self.n_nodes, j.shape[2]))
            gam = self._gamma1
            for i in range(self.nd):
                for k in range(i, self.nd):
                    m = d2[i][k]
                    if gam is not None:
                        if (i, k) == (0, 1):
                            m = m - gam["cot"][:, None] * j[1]
                        elif (i, k) == (1, 1):
                            m = m - gam["m_sc"][:, None] * j[0]
                    out[i, k] = out[k, i] = m
            if self.field.target.kind == ROUND_SPHERE:
                k2 = self.field.target.curvature
                f = self.field.values
                for i in range(self.nd):
                    for k in range(i, self.nd):
                        dot = np.sum(j[i] * j[k], axis=1)
                        m = out[i, k] + (k2 * dot)[:, None] * f
                        out[i, k] = out[k, i] = m
            return out

        return self._get("hessian", build)

    @property
    def second_form(self):
        """Normal-projected second fundamental form.

        Returns dict with II_dom (nd, nd, N, nd): graph-coordinate domain
        components; II_tgt (nd, nd, N, C): target components; both after
        removing the graph-tangential part of the ambient Hessian.
        """

        def build():
            j = self.jac
            m = self.hessian
            g_inv = self.metric_inv
            gam = self._gamma1
            nd, n = self.nd, self.n_nodes
            # Gamma-part of the ambient acceleration, as domain chart vectors.
            v_dom = np.zeros((nd, nd, n, nd))
            if gam is not None:
                v_dom[0, 1, :, 1] = v_dom[1, 0, :, 1] = gam["cot"]
                v_dom[1, 1, :, 0] = gam["m_sc"]
            # <V_ij, E_l> with E_l the graph coordinate frame.
            inner = np.empty((nd, nd, n, nd))
            for i in range(nd):
                for k in range(nd):
                    for l in range(nd):
                        val = np.sum(m[i, k] * j[l], axis=1)
                        val = val + self.g1_diag[l] * v_dom[i, k, :, l]
                        inner[i, k, :, l] = val
            # Tangential coefficients c^k_ij = g^{kl} <V_ij, E_l>.
            coef = np.einsum("klx,ijxl->ijxk", g_inv, inner)
            ii_dom = v_dom - coef
            ii_tgt = m - np.einsum("ijxk,kxc->ijxc", coef, j)
            return {"dom": ii_dom, "tgt": ii_tgt}

        return self._get("second_form", build)

    @property
    def A_norm_sq(self) -> np.ndarray:
        def build():
            ii = self.second_form
            g_inv = self.metric_inv
            pair = np.einsum("ijxm,klxm,mx->ijklx", ii["dom"], ii["dom"], self.g1_diag)
            pair = pair + np.einsum("ijxc,klxc->ijklx", ii["tgt"], ii["tgt"])
            return np.einsum("ikx,jlx,ijklx->x", g_inv, g_inv, pair)

        return self._get("A_norm_sq", build)

    @property
    def mean_curvature(self):
        """H as a product vector: dict with dom (N, nd) and tgt (N, C)."""

        def build():
            ii = self.second_form
            g_inv = self.metric_inv
            h_dom = np.einsum("ijx,ijxk->xk", g_inv, ii["dom"])
            h_tgt = np.einsum("ijx,ijxc->xc", g_inv, ii["tgt"])
            return {"dom": h_dom, "tgt": h_tgt}

        return self._get("mean_curvature", build)

    @property
    def H_norm_sq(self) -> np.ndarray:
        def build():
            h = self.mean_curvature
            out = np.einsum("xk,xk,kx->x", h["dom"], h["dom"], self.g1_diag)
            return out + np.sum(h["tgt"] * h["tgt"], axis=1)

        return self._get("H_norm_sq", build)

    # ------------------------------------------------------------------ #
    # adapted frames and frame components of the second form (2D domains)
    # ------------------------------------------------------------------ #

    @property
    def frames(self):
        """Adapted-frame data per node (2D domains only).

        dict with a_dom (2, N, 2) chart components of the singular domain
        basis, a_tgt (2, N, 2) orthonormal target components, and lambdas.
        """

        def build():
            if self.nd != 2:
                raise FlowBreakdownError("adapted frame sweep requires a 2D domain")
            p = self._whitened_pullback
            jw = self._cache["_jac_whitened"]
            n = self.n_nodes
            p00, p01, p11 = p[0, 0], p[0, 1], p[1, 1]
            lam_sq1 = self.lambdas[0] ** 2
            # Two candidate eigenvectors for the top eigenvalue; keep the one
            # with the larger norm (stable branch), fall back to (1, 0) when
            # the form is a multiple of the identity.
            vxa, vya = p01, lam_sq1 - p00
            vxb, vyb = lam_sq1 - p11, p01
            use_a = vxa * vxa + vya * vya >= vxb * vxb + vyb * vyb
            vx = np.where(use_a, vxa, vxb)
            vy = np.where(use_a, vya, vyb)
            norm = np.sqrt(vx * vx + vy * vy)
            degen = norm <= 1e-150
            safe_norm = np.where(degen, 1.0, norm)
            vx = np.where(degen, 1.0, vx / safe_norm)
            vy = np.where(degen, 0.0, vy / safe_norm)
            # Canonical sign: dominant component positive.
            flip = np.where(np.abs(vx) >= np.abs(vy), np.sign(vx), np.sign(vy))
            flip = np.where(flip == 0, 1.0, flip)
            vx, vy = vx * flip, vy * flip
            a_whit = np.stack([np.stack([vx, vy], axis=1), np.stack([-vy, vx], axis=1)])
            w = 1.0 / np.sqrt(self.g1_diag)
            a_dom = a_whit * np.stack([w[0], w[1]], axis=1)[None]
            a_tgt = np.zeros((2, n, 2))
            lams = self.lambdas
            for i in range(2):
                df_a = a_whit[i, :, 0, None] * jw[0] + a_whit[i, :, 1, None] * jw[1]
                safe = lams[i] > 1e-12
                a_tgt[i] = np.where(safe[:, None], df_a / np.where(safe, lams[i], 1.0)[:, None], 0.0)
            # Deterministic completion where the rank drops.
            need0 = lams[0] <= 1e-12
            a_tgt[0][need0] = [1.0, 0.0]
            need1 = lams[1] <= 1e-12
            a_tgt[1][need1] = np.stack([-a_tgt[0][need1, 1], a_tgt[0][need1, 0]], axis=1)
            return {"a_dom": a_dom, "a_tgt": a_tgt, "a_whit": a_whit}

        return self._get("frames", build)

    @property
    def h_frame(self) -> np.ndarray:
        """(2, 2, 2, N) second-form components h[alpha, i, k] in the adapted
        frames (2D domains)."""

        def build():
            fr = self.frames
            ii = self.second_form
            lams = self.lambdas
            n = self.n_nodes
            # Target components of II in the same orthonormal basis as a_tgt.
            if self.field.target.kind == ROUND_SPHERE:
                t1, t2 = self.tangent_basis
                ii_t = np.stack(
                    [np.sum(ii["tgt"] * t1[None, None], axis=3),
                     np.sum(ii["tgt"] * t2[None, None], axis=3)],
                    axis=3,
                )
            else:
                ii_t = ii["tgt"]
            # <II_pq, e_nor[j]> = (tgt . a_tgt[j] - lam_j * g1(dom, a_dom[j])) / sqrt(1+lam_j^2)
            proj = np.empty((2, 2, 2, n))
            for jdx in range(2):
                tgt_dot = np.einsum("pqxc,xc->pqx", ii_t, fr["a_tgt"][jdx])
                dom_dot = np.einsum("pqxm,mx,xm->pqx", ii["dom"], self.g1_diag,
                                    fr["a_dom"][jdx])
                proj[jdx] = (tgt_dot - lams[jdx] * dom_dot) / np.sqrt(1.0 + lams[jdx] ** 2)
            # Contract the chart indices with the adapted tangent frame.
            e_coef = fr["a_dom"] / np.sqrt(1.0 + lams**2)[:, :, None]  # (i, N, p)
            return np.einsum("ixp,kxq,apqx->aikx", e_coef, e_coef, proj)

        return self._get("h_frame", build)

    def second_form_at(self, node: int) -> SecondFormData:
        """Pointwise SecondFormData record extracted from the field sweep."""
        h = self.h_frame[:, :, :, node]
        g_inv = self.metric_inv[:, :, node]
        fr = self.frames
        lams = self.lambdas[:, node]
        # Mean curvature components on the normal frame: trace of h in the
        # orthonormal tangent frame equals the g-trace of II.
        h_trace = np.array([np.trace(h[a]) for a in range(2)])
        return SecondFormData(h=h, H=h_trace, A_norm_sq=float(np.sum(h * h)))


def monitor_scalars(ana: FieldAnalysis) -> dict:
    """Deterministic reductions used by the time-series monitor."""
    weights = ana.sqrt_det_metric * float(np.prod(ana.grid.spacing))
    return {
        "min_eta": float(np.min(ana.eta)),
        "min_eta1": float(np.min(ana.eta1)),
        "max_product": float(np.max(ana.product_lambda)),
        "max_A_norm_sq": float(np.max(ana.A_norm_sq)),
        "energy_H": float(np.sum(ana.H_norm_sq * weights)),
        "area": float(np.sum(weights)),
    }
