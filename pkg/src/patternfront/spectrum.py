"""Spatial-dynamics spectra of the linearization about the ground state.

For a front moving with speed ``c`` the ansatz ``u = U(x - c t, x)`` with
Fourier modes ``exp(i n kc p)`` in the periodic variable turns the linear
problem into first-order systems ``d/dxi (U_n, W_n) = L_n (U_n, W_n)`` with a
4x4 companion block for the Swift-Hohenberg part and a 2x2 block for the
conservation law.  With ``mu = n*kc``, ``alpha = eps^2 alpha0`` and
``c = eps c0`` the bottom rows are::

    A = -(1 - mu^2)^2 + alpha      B = -4 i mu (1 - mu^2) + c
    C = 6 mu^2 - 2                 D = -4 i mu
    G = mu^2                       H = 2 i mu - c

The conservation block is written for the conjugate orientation
``exp(-i mu p)`` (its double eigenvalue at ``eps = 0`` sits at ``+i mu``
while the Swift-Hohenberg ones sit at ``-i(mu +- 1)``); real parts, which is
all the gap analysis uses, do not depend on this choice.

Dispersive extension
--------------------
For ``u_t = -(1+d_x^2)^2 u + alpha u + c_u d_x^3 u + ...`` and
``v_t = d_x^2 v + c_v d_x v + ...`` a modulating front
``(u, v) = (U, V)(x - c t, x - beta t)`` gives ``d_t -> -c d_xi - beta d_p`` and
``d_x -> d_xi + d_p``.  On the Fourier mode ``exp(i mu p)`` write
``m = s + i mu`` with ``s = d_xi``.  The Swift-Hohenberg part becomes

    (1 + m^2)^2 - c_u m^3 - c s - i beta mu - alpha = 0

and expanding in ``s`` gives the companion row::

    D = c_u - 4 i mu
    C = 6 mu^2 - 2 + 3 i mu c_u
    B = -4 i mu (1 - mu^2) - 3 mu^2 c_u + c
    A = -(1 - mu^2)^2 - i mu^3 c_u + i beta mu + alpha

The conservation law, in the same conjugate orientation as above
(``mu -> -mu``), gives ``G = mu^2 + i mu (c_v + beta)`` and
``H = 2 i mu - c_v - c``.  The quadratic terms ``u d_x u`` and
``gamma_2 d_x(u^2)`` only enter the nonlinearity.  For ``c_u = c_v = beta = 0``
both blocks reduce to the ones above.  The periodic pattern of the dispersive
model drifts with phase velocity ``beta = c_u + O(eps)``; ``beta`` defaults to
``c_u`` so that the critical modes ``n = +-1`` are neutral at ``eps = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import DomainError, ModelParams, derived_delta

__all__ = [
    "ClassificationError",
    "CentralReport",
    "EigenPairing",
    "SpectrumError",
    "SpectrumSlice",
    "adjoint_pairing",
    "align_branches",
    "asymptotic_eigenvalues",
    "build_blocks",
    "char_poly_con",
    "char_poly_sh",
    "classify_central",
    "compute_spectrum",
    "dispersion_curves",
    "exact_eigenvalues",
    "extended_blocks",
    "extended_model_spectrum",
    "polynomial_roots",
    "sort_eigenvalues",
    "spectrum_rows",
]

# i^{3/2} on the principal branch
I_THREE_HALVES = complex(math.cos(3 * math.pi / 4), math.sin(3 * math.pi / 4))


class SpectrumError(RuntimeError):
    """Eigenvalue computation failed its residual check."""


class ClassificationError(RuntimeError):
    """Central/hyperbolic splitting could not be established."""

    def __init__(self, message: str, offending: Sequence = ()):
        super().__init__(message)
        self.offending = list(offending)


@dataclass
class SpectrumSlice:
    n: int
    mu: float
    params: ModelParams
    L_sh: np.ndarray
    L_con: np.ndarray
    exact_sh: np.ndarray | None = None
    exact_con: np.ndarray | None = None
    asym_sh: np.ndarray | None = None
    asym_con: np.ndarray | None = None
    central_flags: np.ndarray | None = None  # 4 SH flags then 2 con flags

    @property
    def exact(self) -> np.ndarray:
        return np.concatenate([self.exact_sh, self.exact_con])


@dataclass
class EigenPairing:
    sign: int
    lam: complex
    phi: np.ndarray
    psi: np.ndarray
    pairing: complex
    char_poly_derivative: complex = field(default=0j)


def dispersion_curves(k, params: ModelParams):
    """Growth rates ``(-(1-k^2)^2 + alpha, -k^2)`` of the two linear branches."""
    k = np.asarray(k, dtype=float)
    lam_u = -(1.0 - k**2) ** 2 + params.alpha
    lam_v = -(k**2)
    if lam_u.ndim == 0:
        return float(lam_u), float(lam_v)
    return lam_u, lam_v


def _companion(bottom: Sequence[complex]) -> np.ndarray:
    m = len(bottom)
    L = np.zeros((m, m), dtype=complex)
    L[np.arange(m - 1), np.arange(1, m)] = 1.0
    L[-1, :] = bottom
    return L


def _sh_row(mu: float, alpha: float, c: float) -> tuple[complex, complex, complex, complex]:
    A = -((1.0 - mu**2) ** 2) + alpha
    B = -4j * mu * (1.0 - mu**2) + c
    C = 6.0 * mu**2 - 2.0
    D = -4j * mu
    return complex(A), complex(B), complex(C), complex(D)


def _con_row(mu: float, c: float) -> tuple[complex, complex]:
    return complex(mu**2), complex(2j * mu - c)


def build_blocks(n: int, params: ModelParams) -> SpectrumSlice:
    mu = n * params.kc
    L_sh = _companion(_sh_row(mu, params.alpha, params.c))
    L_con = _companion(_con_row(mu, params.c))
    return SpectrumSlice(n=n, mu=mu, params=params, L_sh=L_sh, L_con=L_con)


def _poly_from_companion(L: np.ndarray) -> np.ndarray:
    # det(lam - L) = lam^m - row[m-1] lam^{m-1} - ... - row[0]; negated
    row = L[-1]
    return np.concatenate([[-1.0 + 0j], row[::-1]])


def char_poly_sh(n: int, params: ModelParams) -> np.ndarray:
    """Coefficients (highest degree first) of the negated characteristic polynomial.

    ``p(lam) = -lam^4 + D lam^3 + C lam^2 + B lam + A``, which equals
    ``-(lam + i(mu+1))^2 (lam + i(mu-1))^2 + c lam + alpha``.
    """
    return _poly_from_companion(build_blocks(n, params).L_sh)


def char_poly_con(n: int, params: ModelParams) -> np.ndarray:
    """Coefficients of ``det(nu - L_con) = (nu - i mu)^2 + c nu``."""
    return -_poly_from_companion(build_blocks(n, params).L_con)


def sort_eigenvalues(values: Iterable[complex]) -> np.ndarray:
    """Order by rounded imaginary part, then real part."""
    values = np.asarray(list(values), dtype=complex)
    return values[np.lexsort((values.real, np.round(values.imag)))]


def _refine_roots(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """Newton-polish simple roots and collapse numerically coincident pairs."""
    coeffs = np.asarray(coeffs, dtype=complex)
    dcoeffs = np.polyder(coeffs)
    ddcoeffs = np.polyder(dcoeffs)
    scale = np.max(np.abs(coeffs))
    roots = np.array(roots, dtype=complex)

    # A double root is a simple root of p'; eigensolvers scatter it by sqrt(machine eps).
    used = np.zeros(roots.size, dtype=bool)
    for i in range(roots.size):
        for j in range(i + 1, roots.size):
            if used[i] or used[j]:
                continue
            zi, zj = roots[i], roots[j]
            if abs(zi - zj) > 1e-6 * (1.0 + abs(zi)):
                continue
            z = 0.5 * (zi + zj)
            for _ in range(8):
                d2 = np.polyval(ddcoeffs, z)
                if d2 == 0:
                    break
                step = np.polyval(dcoeffs, z) / d2
                z -= step
                if abs(step) <= 1e-16 * (1.0 + abs(z)):
                    break
            if abs(np.polyval(coeffs, z)) <= 1e-12 * scale * (1.0 + abs(z) ** 4):
                roots[i] = roots[j] = z
                used[i] = used[j] = True

    for i in np.flatnonzero(~used):
        z = roots[i]
        others = np.delete(roots, i)
        sep = np.min(np.abs(others - z)) if others.size else np.inf
        for _ in range(4):
            d = np.polyval(dcoeffs, z)
            if d == 0:
                break
            step = np.polyval(coeffs, z) / d
            # never jump towards a neighbouring root
            if abs(step) > 0.25 * sep:
                break
            z -= step
            if abs(step) <= 1e-16 * (1.0 + abs(z)):
                break
        roots[i] = z
    return roots


def _check_residual(coeffs: np.ndarray, roots: np.ndarray, n: int, block: str) -> None:
    lead = abs(coeffs[0])
    for lam in roots:
        res = abs(np.polyval(coeffs, lam)) / lead
        if not res <= 1e-9 * (1.0 + abs(lam) ** (len(coeffs) - 1)):
            raise SpectrumError(
                f"{block} block n={n}: root {lam:.6g} has residual {res:.3g}"
            )


def polynomial_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots from the characteristic polynomial alone (``numpy.roots`` + polishing)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    return sort_eigenvalues(_refine_roots(coeffs, np.roots(coeffs)))


def exact_eigenvalues(sl: SpectrumSlice) -> SpectrumSlice:
    """Fill ``exact_sh``/``exact_con`` from a dense eigensolve, polished on the polynomials."""
    p_sh = _poly_from_companion(sl.L_sh)
    p_con = _poly_from_companion(sl.L_con)
    try:
        raw_sh = np.linalg.eigvals(sl.L_sh)
        raw_con = np.linalg.eigvals(sl.L_con)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver failed for n={sl.n}: {exc}") from exc
    sh = _refine_roots(p_sh, raw_sh)
    con = _refine_roots(p_con, raw_con)
    _check_residual(p_sh, sh, sl.n, "SH")
    _check_residual(p_con, con, sl.n, "con")
    sl.exact_sh = sort_eigenvalues(sh)
    sl.exact_con = sort_eigenvalues(con)
    return sl


def asymptotic_eigenvalues(n: int, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Leading-order expansions of the six eigenvalues of ``L_n``.

    Central SH branches (``n = +-1``): ``eps (-c0 +- Delta)/8``.  Other SH
    branches: ``-i(mu+-1) +- eps^{1/2} i^{3/2} sqrt(-c0 (mu+-1))/2``.
    Conservation branches: ``0, -eps c0`` for ``n = 0`` and
    ``i mu +- eps^{1/2} i^{3/2} sqrt(mu c0)`` otherwise.  Square roots are
    principal roots of the (complex) radicand; each pair contains both signs,
    so the branch choice does not change the set.
    """
    eps, c0 = params.eps, params.c0
    mu = n * params.kc
    root_eps = math.sqrt(eps)

    sh: list[complex] = []
    for shift in (+1.0, -1.0):
        centre = -1j * (mu + shift)
        if n == -int(shift) and params.kc == 1.0:
            delta = derived_delta(params)
            sh += [eps * (-c0 + delta) / 8, eps * (-c0 - delta) / 8]
        else:
            r = root_eps * I_THREE_HALVES * np.sqrt(complex(-c0 * (mu + shift))) / 2
            sh += [centre + r, centre - r]

    if n == 0:
        con = [0.0 + 0j, -eps * c0 + 0j]
    else:
        r = root_eps * I_THREE_HALVES * np.sqrt(complex(mu * c0))
        con = [1j * mu + r, 1j * mu - r]
    return sort_eigenvalues(sh), sort_eigenvalues(con)


def align_branches(reference: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Permute ``values`` onto ``reference`` by minimal total distance."""
    from scipy.optimize import linear_sum_assignment

    reference = np.asarray(reference, dtype=complex)
    values = np.asarray(values, dtype=complex)
    cost = np.abs(reference[:, None] - values[None, :])
    rows, cols = linear_sum_assignment(cost)
    out = np.empty_like(values)
    out[rows] = values[cols]
    return out


def compute_spectrum(n_max: int, params: ModelParams, asymptotic: bool = True) -> list[SpectrumSlice]:
    """Slices for ``|n| <= n_max`` with exact (and optionally asymptotic) eigenvalues."""
    slices = []
    for n in range(-n_max, n_max + 1):
        sl = exact_eigenvalues(build_blocks(n, params))
        if asymptotic:
            sl.asym_sh, sl.asym_con = asymptotic_eigenvalues(n, params)
        slices.append(sl)
    return slices


@dataclass
class CentralReport:
    eps: float
    threshold: float
    central: list[tuple[int, str, complex]]
    max_central_re: float
    min_hyperbolic_re: float
    ratio: float
    k_hyperbolic: float

    @property
    def n_central(self) -> int:
        return len(self.central)


def classify_central(slices: Sequence[SpectrumSlice], eps: float | None = None) -> CentralReport:
    """Split the spectrum into O(eps) central and O(eps^{1/2}) hyperbolic parts.

    Central means ``|Re lam| <= c0*eps`` (up to round-off).  The bound is
    attained exactly by ``nu_{0,-} = -eps c0``, a root of ``nu (nu + eps c0)``,
    and dominates the central Swift-Hohenberg pair ``eps (-c0 +- Delta)/8``.
    The first hyperbolic branches have real parts
    ``eps^{1/2} sqrt(c0/8) - eps c0/4 + O(eps^{3/2})``, so the split is
    clean for small ``eps``; the report gives the measured gap either way.
    """
    if not slices:
        raise ClassificationError("no slices given")
    params = slices[0].params
    if eps is None:
        eps = params.eps
    if any(sl.params.eps != eps for sl in slices):
        raise ClassificationError("slices were computed for a different eps")
    if eps <= 0:
        raise ClassificationError("no spectral gap at eps = 0: every eigenvalue is neutral")
    ns = {sl.n for sl in slices}
    n_max = max(abs(n) for n in ns)
    if n_max < 3 or ns != set(range(-n_max, n_max + 1)):
        raise ClassificationError("slices must cover every |n| <= N with N >= 3")

    c0 = params.c0
    threshold = c0 * eps * (1.0 + 1e-9)

    central: list[tuple[int, str, complex]] = []
    hyper_min = math.inf
    central_max = 0.0
    for sl in slices:
        if sl.exact_sh is None:
            exact_eigenvalues(sl)
        flags = np.abs(sl.exact.real) <= threshold
        sl.central_flags = flags
        for j, lam in enumerate(sl.exact):
            block = "sh" if j < 4 else "con"
            if flags[j]:
                central.append((sl.n, block, complex(lam)))
                central_max = max(central_max, abs(lam.real))
            else:
                hyper_min = min(hyper_min, abs(lam.real))
    if len(central) != 6:
        raise ClassificationError(
            f"expected 6 central eigenvalues, found {len(central)} (threshold {threshold:.3g})",
            offending=central,
        )
    return CentralReport(
        eps=eps,
        threshold=threshold,
        central=central,
        max_central_re=central_max,
        min_hyperbolic_re=hyper_min,
        ratio=central_max / hyper_min,
        k_hyperbolic=hyper_min / math.sqrt(eps),
    )


def adjoint_pairing(sign: int, params: ModelParams) -> EigenPairing:
    """Eigenvector pairing for the central eigenvalues of ``L_1^SH``.

    ``phi`` is the right eigenvector with first component one; ``psi`` the
    eigenvector of the adjoint matrix for the conjugate eigenvalue, with last
    component one.  The pairing is ``<psi, phi> = sum(conj(psi) * phi)``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if params.eps <= 0:
        raise DomainError("the pairing degenerates at eps = 0 (Jordan block)")
    delta = derived_delta(params)
    if delta == 0:
        raise DomainError("Delta = 0: the central pair is defective")
    L = build_blocks(1, params).L_sh
    target = params.eps * (-params.c0 + sign * delta) / 8

    w, V = np.linalg.eig(L)
    order = np.argsort(np.abs(w - target))
    i, other = order[0], order[1]
    if abs(w[i] - w[other]) < 1e-8 * max(1.0, abs(w[i])):
        raise SpectrumError("central eigenvalues are numerically coincident; eigenvectors unreliable")
    lam = w[i]
    phi = V[:, i] / V[0, i]
    phi[0] = 1.0

    wa, U = np.linalg.eig(L.conj().T)
    j = int(np.argmin(np.abs(wa - np.conj(lam))))
    if abs(U[3, j]) < 1e-300:
        raise SpectrumError("adjoint eigenvector has a vanishing last component")
    psi = U[:, j] / U[3, j]
    psi[3] = 1.0

    p = _poly_from_companion(L)
    dp = np.polyval(np.polyder(p), lam)
    return EigenPairing(sign=sign, lam=complex(lam), phi=phi, psi=psi,
                        pairing=complex(np.vdot(psi, phi)), char_poly_derivative=complex(dp))


def extended_blocks(n: int, params: ModelParams, cu: float, cv: float, c: float,
                    beta: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Companion blocks of the dispersive extension (derivation in the module docstring)."""
    if beta is None:
        beta = cu
    mu = n * params.kc
    alpha = params.alpha
    D = cu - 4j * mu
    C = 6 * mu**2 - 2 + 3j * mu * cu
    B = -4j * mu * (1 - mu**2) - 3 * mu**2 * cu + c
    A = -((1 - mu**2) ** 2) - 1j * mu**3 * cu + 1j * beta * mu + alpha
    G = mu**2 + 1j * mu * (cv + beta)
    H = 2j * mu - cv - c
    return _companion([A, B, C, D]), _companion([G, H])


def extended_model_spectrum(n: int, params: ModelParams, cu: float, cv: float, c: float,
                            beta: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    L_sh, L_con = extended_blocks(n, params, cu, cv, c, beta)
    sh = _refine_roots(_poly_from_companion(L_sh), np.linalg.eigvals(L_sh))
    con = _refine_roots(_poly_from_companion(L_con), np.linalg.eigvals(L_con))
    return sort_eigenvalues(sh), sort_eigenvalues(con)


def spectrum_rows(slices: Sequence[SpectrumSlice]) -> list[dict]:
    """One row per (n, block, branch) for CSV output."""
    rows = []
    for sl in slices:
        asym_sh = align_branches(sl.exact_sh, sl.asym_sh) if sl.asym_sh is not None else None
        asym_con = align_branches(sl.exact_con, sl.asym_con) if sl.asym_con is not None else None
        for block, exact, asym, offset in (("sh", sl.exact_sh, asym_sh, 0),
                                           ("con", sl.exact_con, asym_con, 4)):
            for j, lam in enumerate(exact):
                a = asym[j] if asym is not None else complex("nan")
                flag = bool(sl.central_flags[offset + j]) if sl.central_flags is not None else False
                rows.append({
                    "n": sl.n,
                    "block": block,
                    "branch": j,
                    "re_exact": lam.real,
                    "im_exact": lam.imag,
                    "re_asym": a.real,
                    "im_asym": a.imag,
                    "central": int(flag),
                })
    return rows
