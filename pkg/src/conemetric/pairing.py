"""Obstruction pairing between eigenfunctions at 2 and splitting directions.

Near a cone point of angle 2*pi*beta an eigenfunction phi with eigenvalue 2
expands in indicial modes

    phi ~ a0 + sum_{m=1}^{[beta]} (a'_m cos(m theta) + a''_m sin(m theta))
              * r^{m/beta},

while the derivative of the conformal factor along a cone-point splitting
family carries the dual modes r^{-m/beta}.  The bilinear pairing between the
two coefficient families is a boundary integral around each cone point; its
kernel is the tangent space of splitting directions that preserve solvability
of the curvature equation.  This module extracts expansion coefficients by
least squares on annuli, evaluates the pairing both in closed form and by
quadrature, computes the kernel, classifies the local deformation behaviour,
and numerically certifies the two flatness lemmas that drive the pairing
derivation: vanishing of the low ``rho``-derivatives of the splitting
conformal factor, and flatness of the eigenvalue along the splitting family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenCoeffs",
    "DirectionCoeffs",
    "FlatnessReport",
    "extract_eigf_coeffs",
    "direction_coeffs",
    "pairing_B",
    "pairing_matrix",
    "boundary_pairing_integral",
    "solution_space",
    "classify_case",
    "direction_counts",
    "football_counts",
    "vdot_vanishing_check",
    "vdot_limit_residual",
    "eigenvalue_flatness_check",
]

#: least-squares fit (or inter-annulus disagreement) above this flags the row
FIT_TOL = 1e-4

#: singular values below RANK_TOL * sigma_max count as zero
RANK_TOL = 1e-8

#: default extraction annuli in the cone chart, [inner, outer] radii
DEFAULT_ANNULI = ((0.05, 0.1), (0.1, 0.2))


def _mode_count(beta):
    # [beta] indicial modes for beta > 1; the single r^{1/beta} mode otherwise
    return max(1, int(math.floor(beta + 1e-12)))


@dataclass(frozen=True)
class EigenCoeffs:
    """Indicial coefficients of an eigenfunction at one cone point.

    ``modes`` holds triples (m, cos-coefficient, sin-coefficient) for the
    r^{m/beta} modes, m = 1..[beta] (m = 1 only when beta < 1).  ``residual``
    is the worst of the per-annulus fit residuals and the inter-annulus
    coefficient disagreement; rows with residual above FIT_TOL are unreliable.
    """

    beta: float
    constant: float
    modes: tuple
    residual: float
    reliable: bool


@dataclass(frozen=True)
class DirectionCoeffs:
    """Splitting-direction coefficients (e'_m, e''_m) at one cone point."""

    beta: float
    modes: tuple  # ((m, e_cos, e_sin), ...)

    @property
    def vector(self):
        return np.array([c for (_, ec, es) in self.modes for c in (ec, es)])


def extract_eigf_coeffs(phi, beta, annuli=DEFAULT_ANNULI, n_r=8, n_theta=64):
    """Least-squares indicial coefficients of phi(r, theta) at a cone point.

    phi is a callable on the cone chart (r = geodesic distance, theta with
    period 2*pi).  The fit basis is {1} plus the indicial pairs
    r^{m/beta} cos(m theta), r^{m/beta} sin(m theta) for m = 1..[beta], plus
    an r^2 nuisance column absorbing the smooth tail; the nuisance keeps the
    constant and the indicial coefficients from soaking up the r^2 trend.
    The fit is run on each annulus separately and the coefficient
    disagreement between annuli is folded into the reported residual.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    mmax = _mode_count(beta)
    results = []
    residuals = []
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    for lo, hi in annuli:
        if not 0 < lo < hi:
            raise ValueError("annulus radii must satisfy 0 < lo < hi")
        radii = np.geomspace(lo, hi, n_r)
        rr, tt = np.meshgrid(radii, theta, indexing="ij")
        rr, tt = rr.ravel(), tt.ravel()
        cols = [np.ones_like(rr)]
        for m in range(1, mmax + 1):
            rad = rr ** (m / beta)
            cols.append(rad * np.cos(m * tt))
            cols.append(rad * np.sin(m * tt))
        cols.append(rr ** 2)
        design = np.column_stack(cols)
        rhs = np.asarray(phi(rr, tt), dtype=float)
        coef, _, _, _ = np.linalg.lstsq(design, rhs, rcond=None)
        misfit = design @ coef - rhs
        residuals.append(math.sqrt(float(np.mean(misfit ** 2))))
        results.append(coef[:-1])  # drop the nuisance column
    results = np.array(results)
    disagreement = float(np.max(np.abs(results[0] - results[1]))) \
        if len(results) > 1 else 0.0
    coef = results[0]
    residual = max(max(residuals), disagreement)
    modes = tuple((m, float(coef[2 * m - 1]), float(coef[2 * m]))
                  for m in range(1, mmax + 1))
    return EigenCoeffs(beta=float(beta), constant=float(coef[0]), modes=modes,
                       residual=residual, reliable=residual <= FIT_TOL)


def direction_coeffs(A, beta0):
    """Direction coefficients from splitting polynomial coefficients.

    Inverts A_m = beta0^{m/beta0} (e'_m + i e''_m) componentwise.
    """
    if beta0 <= 0:
        raise ValueError("beta0 must be positive")
    coeffs = tuple(complex(a) for a in getattr(A, "A", A))
    modes = []
    for m, a in enumerate(coeffs, start=1):
        e = a / beta0 ** (m / beta0)
        modes.append((m, e.real, e.imag))
    return DirectionCoeffs(beta=float(beta0), modes=tuple(modes))


def _row_term(eig, direction):
    if len(eig.modes) != len(direction.modes):
        raise ValueError("eigenfunction and direction mode counts differ")
    total = 0.0
    for (m, ac, asn), (md, ec, es) in zip(eig.modes, direction.modes):
        if m != md:
            raise ValueError("mode indices do not match")
        # the m weight applies at weighted points (beta > 1) only; the
        # beta < 1 terms enter unweighted
        w = float(m) if eig.beta > 1.0 else 1.0
        total += w * (ac * ec + asn * es)
    return total


def pairing_B(eig, direction):
    """Pairing values B_i between eigenfunction rows and a direction.

    ``eig`` is one row (a sequence of EigenCoeffs, one per cone point) or a
    sequence of such rows, one per basis eigenfunction; ``direction`` is the
    matching sequence of DirectionCoeffs.  Returns the vector (B_i).
    """
    rows = list(eig)
    if rows and isinstance(rows[0], EigenCoeffs):
        rows = [rows]
    dirs = list(direction)
    out = []
    for row in rows:
        if len(row) != len(dirs):
            raise ValueError("row and direction cone-point counts differ")
        out.append(sum(_row_term(e, d) for e, d in zip(row, dirs)))
    return np.array(out)


def pairing_matrix(rows):
    """The pairing as a matrix acting on assembled direction vectors.

    Row i lists the coefficients of B_i as a linear functional of the
    direction vector (e'_{11}, e''_{11}, e'_{12}, ...) concatenated over cone
    points; the kernel of this matrix is the solution space.
    """
    rows = list(rows)
    if rows and isinstance(rows[0], EigenCoeffs):
        rows = [rows]
    out = []
    for row in rows:
        entries = []
        for eig in row:
            for (m, ac, asn) in eig.modes:
                w = float(m) if eig.beta > 1.0 else 1.0
                entries.extend((w * ac, w * asn))
        out.append(entries)
    return np.array(out, dtype=float)


def boundary_pairing_integral(phi_expansion, vdot_expansion, epsilons, beta,
                              n_theta=256):
    """Quadrature limit of the pairing boundary integral at a cone point.

    The expansions are coefficient lists [(m, c_cos, c_sin), ...] with m = 0
    allowed for constants; phi carries r^{m/beta} and vdot carries
    r^{-m/beta}.  Evaluates the flux integral

        I(eps) = \\oint_{r=eps} (vdot d_r phi - phi d_r vdot) beta r dtheta

    with the cone-angle arc length beta r dtheta, by trapezoid quadrature in
    theta at each radius, then extrapolates eps -> 0 by polynomial (Neville)
    extrapolation.  For matched mode families the integrand is exactly
    radius-independent and the limit equals 2 pi sum_m m (a'e' + a''e'').
    """
    epsilons = [float(e) for e in epsilons]
    if len(epsilons) < 2 or any(e <= 0 for e in epsilons):
        raise ValueError("need at least two positive radii")
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)

    def fields(expansion, sign, r):
        val = np.zeros_like(theta)
        dval = np.zeros_like(theta)
        for m, cc, cs in expansion:
            ang = cc * np.cos(m * theta) + cs * np.sin(m * theta)
            p = sign * m / beta
            val += ang * r ** p
            if m != 0:
                dval += ang * p * r ** (p - 1.0)
        return val, dval

    vals = []
    for eps in epsilons:
        phi, dphi = fields(phi_expansion, +1, eps)
        vdot, dvdot = fields(vdot_expansion, -1, eps)
        integrand = (vdot * dphi - phi * dvdot) * beta * eps
        vals.append(float(np.mean(integrand)) * 2.0 * math.pi)

    # Neville extrapolation to eps = 0
    table = list(vals)
    xs = epsilons
    n = len(xs)
    for level in range(1, n):
        for i in range(n - level):
            table[i] = (table[i] * (0.0 - xs[i + level])
                        - table[i + 1] * (0.0 - xs[i])) / (xs[i] - xs[i + level])
    limit = table[0]
    spread = max(abs(v - limit) for v in vals)
    scale = 1.0 + max(abs(v) for v in vals)
    if spread > 1e-6 * scale and abs(vals[-1] - limit) > 0.5 * spread:
        raise ValueError("boundary integral did not converge as eps -> 0; "
                         "mismatched mode exponents?")
    return limit


def solution_space(B_matrix, atol=0.0):
    """Kernel basis and rank report of the assembled pairing matrix.

    Returns (V, report) where the columns of V span the kernel and report
    carries the rank (singular values below RANK_TOL * sigma_max, or below
    the absolute floor ``atol``, count as zero), the kernel dimension and
    the singular values.  Pass the coefficient-extraction accuracy as
    ``atol`` when the matrix entries are only known to that level.
    """
    B = np.atleast_2d(np.asarray(B_matrix, dtype=float))
    u, s, vt = np.linalg.svd(B)
    if s.size and s[0] > 0:
        rank = int(np.sum(s > max(RANK_TOL * s[0], atol)))
    else:
        rank = 0
    kernel = vt[rank:].T
    report = {"rank": rank, "dim": B.shape[1] - rank,
              "singular_values": s}
    return kernel, report


def direction_counts(betas):
    """Direction-space counts (K, K0, k0) for a tuple of cone angles.

    K0 sums [beta_j] over the points with beta_j > 1 (there are k0 of them)
    and K = K0 + (k - k0) adds one slot for each remaining point.
    """
    betas = [float(b) for b in betas]
    if any(b <= 0 for b in betas):
        raise ValueError("angles must be positive")
    k0 = sum(1 for b in betas if b > 1.0)
    K0 = sum(int(math.floor(b + 1e-12)) for b in betas if b > 1.0)
    K = K0 + (len(betas) - k0)
    return K, K0, k0


def football_counts(beta):
    """(K, K0, k0) for the football of angle 2*pi*beta at both poles."""
    return direction_counts((beta, beta))


def classify_case(ell, K, K0, rank):
    """Local deformation case from the eigenspace and pairing data.

    ell = 0 gives the unobstructed case; ell = 2*K0 with K = K0 gives
    rigidity; otherwise 1 <= ell < 2K gives partial rigidity.  The solution
    dimension is 2K minus the computed rank (the rank equals ell in the
    generic case, but degenerate pairings -- the football -- have smaller
    rank and a correspondingly larger solution space).
    """
    if ell < 0 or K < 0 or K0 < 0 or rank < 0:
        raise ValueError("counts must be nonnegative")
    if rank > min(ell, 2 * K) if ell > 0 else rank > 0:
        raise ValueError("rank cannot exceed min(ell, 2K)")
    if ell > 2 * K:
        raise ValueError("ell exceeds 2K; inconsistent with the rank bound")
    dim = 2 * K - rank
    if ell == 0:
        return {"case": "unobstructed", "dim": dim}
    if K == K0 and ell == 2 * K0:
        return {"case": "rigidity", "dim": dim}
    return {"case": "partial_rigidity", "dim": dim}


def _vdot_fd(coeffs, J, k, h, z):
    """k-th central difference in rho of log|z^J + rho^J Q(z)| at rho = 0."""

    def v(rho):
        poly = z ** J
        for m, a in enumerate(coeffs, start=1):
            poly = poly + rho ** J * a * z ** (J - m)
        return np.log(np.abs(poly))

    # nodes rho = (i - k/2) h, second-order accurate
    acc = np.zeros(len(z))
    for i in range(k + 1):
        acc += (-1.0) ** (k - i) * math.comb(k, i) * v((i - k / 2.0) * h)
    return acc / h ** k


def vdot_vanishing_check(A, J, k, h=1e-2, radius=0.5, n_samples=64):
    """Finite-difference residual of the k-th rho-derivative of the
    splitting conformal factor at rho = 0.

    v(rho, z) = log|z^J + rho^J (A_1 z^{J-1} + ... + A_J)| sampled on
    |z| = radius.  The k-th derivative vanishes identically for k < J and
    the central difference decays at rate h^2; at k = J it converges to
    J! * Re(sum_l A_l z^{-l}).
    """
    coeffs = tuple(complex(a) for a in getattr(A, "A", A))
    if len(coeffs) != J:
        raise ValueError("need J polynomial coefficients")
    if not 1 <= k <= J:
        raise ValueError("derivative order must satisfy 1 <= k <= J")
    z = radius * np.exp(2j * math.pi * np.arange(n_samples) / n_samples)
    return float(np.max(np.abs(_vdot_fd(coeffs, J, k, h, z))))


def vdot_limit_residual(A, J, h=2e-2, radius=0.5, n_samples=64):
    """Pointwise misfit of the J-th rho-derivative against its closed form.

    Compares the Richardson-extrapolated J-th central difference of the
    splitting conformal factor at rho = 0 with the analytic value
    J! * Re(sum_l A_l z^{-l}) on |z| = radius and returns the sup misfit.
    """
    coeffs = tuple(complex(a) for a in getattr(A, "A", A))
    if len(coeffs) != J:
        raise ValueError("need J polynomial coefficients")
    z = radius * np.exp(2j * math.pi * np.arange(n_samples) / n_samples)
    coarse = _vdot_fd(coeffs, J, J, h, z)
    fine = _vdot_fd(coeffs, J, J, h / 2.0, z)
    fd = (4.0 * fine - coarse) / 3.0
    limit = math.factorial(J) * np.real(
        sum(a * z ** (-m) for m, a in enumerate(coeffs, start=1)))
    return float(np.max(np.abs(fd - limit)))


@dataclass(frozen=True)
class FlatnessReport:
    beta0: float
    J: int
    rhos: tuple
    lambda_rho: tuple       # eigenvalue derivative along the family
    derivatives: dict       # order k -> d^k lambda / d rho^k at rho = 0
    order: float            # fitted vanishing order of lambda_rho in rho


def _lambda_rho_football(beta0, coeffs, rho, cut_lo=0.3, cut_hi=0.6,
                         n_quad=80):
    """d lambda / d rho for the normalized cos(r) football eigenfunction.

    The eigenvalue derivative along the splitting family is the integral of
    -2 lambda vdot |phi|^2 against the football area element; vdot is the
    rho-derivative of log|z^J + rho^J Q(z)| localized by a radial cutoff.
    The angular integral is evaluated exactly by residues of
    Q(z) / (z (z^J + rho^J Q(z))) on |z| = s: it is constant between the
    moduli of the roots, so only a piecewise-smooth radial quadrature
    remains.
    """
    J = len(coeffs)
    lam = 2.0
    norm2 = 4.0 * math.pi * beta0 / 3.0  # L2 norm^2 of cos(r)

    if rho == 0.0:
        return 0.0

    poly = np.array([1.0 + 0j] + [rho ** J * a for a in coeffs])
    roots = np.roots(poly)
    dpoly = np.polyder(poly)

    def Q(z):
        return np.polyval(np.array(coeffs, dtype=complex), z)

    residues = Q(roots) / (roots * np.polyval(dpoly, roots))
    order_idx = np.argsort(np.abs(roots))
    radii = np.abs(roots)[order_idx]
    residues = residues[order_idx]

    # angular mean of Re[Q / (z^J + rho^J Q)] as a function of s = |z|:
    # 2 pi Re[rho^{-J} + sum of residues inside |z| = s]
    inner = rho ** (-J)
    levels = [2.0 * math.pi * float(np.real(inner + np.sum(residues[:i])))
              for i in range(len(radii) + 1)]

    def smooth(s):
        # |phi|^2 w0 eta s with phi = cos r in the uniformizing chart
        s2b = s ** (2.0 * beta0)
        w0 = 4.0 * beta0 ** 2 * s ** (2.0 * beta0 - 2.0) / (1.0 + s2b) ** 2
        phi2 = ((1.0 - s2b) / (1.0 + s2b)) ** 2 / norm2
        t = np.clip((s - cut_lo) / (cut_hi - cut_lo), 0.0, 1.0)
        eta = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        return phi2 * w0 * eta * s

    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    breaks = [0.0] + [float(r) for r in radii if r < cut_hi] + [cut_hi]
    total = 0.0
    for i in range(len(breaks) - 1):
        a, b = breaks[i], breaks[i + 1]
        if b <= a:
            continue
        s = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        level = levels[min(i, len(levels) - 1)]
        total += 0.5 * (b - a) * float(np.sum(weights * smooth(s))) * level
    return -2.0 * lam * J * rho ** (J - 1) * total


def eigenvalue_flatness_check(football_beta, split_A, orders=(1, 2),
                              rhos=None, fd_step=0.02):
    """Flatness of the eigenvalue 2 along a football splitting family.

    Evaluates the eigenvalue derivative quadrature at the sampled rho values,
    estimates the rho-derivatives of the eigenvalue at 0 by central
    differences of that derivative, and fits the vanishing order of
    d lambda / d rho; the fitted order is at least J (the eigenvalue is flat
    to order J at the unsplit configuration).
    """
    beta0 = float(football_beta)
    coeffs = tuple(complex(a) for a in getattr(split_A, "A", split_A))
    J = len(coeffs)
    if beta0 <= 0 or J < 1:
        raise ValueError("invalid family data")
    if abs(coeffs[-1]) == 0.0:
        raise ValueError("A_J must be nonzero for a genuine split")
    if rhos is None:
        rhos = tuple(np.geomspace(0.01, 0.08, 6))
    lr = [_lambda_rho_football(beta0, coeffs, float(r)) for r in rhos]

    derivatives = {}
    for k in orders:
        if k == 1:
            derivatives[1] = _lambda_rho_football(beta0, coeffs, 0.0)
        else:
            # (k-1)-th central difference of lambda_rho at 0
            acc = 0.0
            m = k - 1
            for i in range(m + 1):
                acc += ((-1.0) ** (m - i) * math.comb(m, i)
                        * _lambda_rho_football(beta0, coeffs,
                                               (i - m / 2.0) * fd_step))
            derivatives[k] = acc / fd_step ** m

    mags = np.abs(lr)
    if np.all(mags < 1e-14):
        order = math.inf
    else:
        logs = np.log(np.maximum(mags, 1e-300))
        order = float(np.polyfit(np.log(rhos), logs, 1)[0])
    return FlatnessReport(beta0=beta0, J=J, rhos=tuple(float(r) for r in rhos),
                          lambda_rho=tuple(lr), derivatives=derivatives,
                          order=order)
