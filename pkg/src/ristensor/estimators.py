"""Joint channel and RIS-imperfection estimators.

Three methods operate on the same received tensor:

* ``hosvd-sti`` -- closed form. Matched-filter the known activation pattern
  out of the block axis, then split the remaining Khatri-Rao structure into
  one rank-one tensor per RIS element and truncate each one's higher-order
  SVD to its dominant component.
* ``bals`` -- iterative bilinear alternating least squares that assumes an
  ideal RIS (no imperfections); serves as the mismatched baseline.
* ``clairvoyant`` -- per-factor least squares with every other factor fixed
  to its true value; serves as the evaluation lower bound.

All estimates carry a per-column complex scaling ambiguity whose three-way
product is 1; :func:`disambiguate` removes it against ground truth for NMSE
evaluation and :func:`normalize_first_entry` pins a ground-truth-free
convention for deployment use.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exceptions import DegenerateInputError, IdentifiabilityError
from .scenario import ChannelSet
from .tensor_ops import khatri_rao, mode_unfold

__all__ = [
    "FactorEstimates",
    "DisambiguationReport",
    "matched_filter",
    "hosvd_sti",
    "estimate_hosvd_sti",
    "bals",
    "clairvoyant",
    "disambiguate",
    "normalize_first_entry",
]


@dataclass(frozen=True)
class FactorEstimates:
    """Estimated factor matrices of one realization.

    ``impairments`` is None for the ideal-RIS baseline, which does not model
    them. ``degenerate_columns`` lists RIS elements whose matched-filtered
    data vanished (fully blocked across all frames, so nothing about them is
    observable); their estimate columns are zeroed and should be excluded
    from error metrics.
    """

    ris_rx: np.ndarray
    tx_ris: np.ndarray
    impairments: Optional[np.ndarray]
    method: str
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    degenerate_columns: tuple = ()


@dataclass(frozen=True)
class DisambiguationReport:
    """Per-column least-squares scalars applied to align estimates with truth."""

    lambda_ris_rx: np.ndarray = field(repr=False)
    lambda_tx_ris: np.ndarray = field(repr=False)
    lambda_impairments: Optional[np.ndarray] = field(repr=False, default=None)


def matched_filter(received: np.ndarray, pattern: np.ndarray) -> np.ndarray:
    """Strip the known activation pattern from the received tensor.

    Right-multiplies the transposed block-axis unfolding by the
    pseudo-inverse of ``pattern.T``, i.e. the least-squares solve of
    ``unfold_3(y).T ~ z @ pattern.T``. In the noiseless case the result is
    the (L*M*P) x N Khatri-Rao product of impairments, tx-RIS channel and
    RIS-rx channel. For a pattern with orthogonal columns (the DFT design)
    the pseudo-inverse reduces to ``conj(pattern) / K``.
    """
    k, n = pattern.shape
    if k < n:
        raise IdentifiabilityError(
            f"pattern has K={k} blocks for N={n} elements; matched filtering "
            "needs K >= N"
        )
    if received.ndim != 4 or received.shape[2] != k:
        raise ValueError(
            f"received tensor shape {received.shape} does not match a "
            f"{k}-block pattern on axis 2"
        )
    gram = pattern.conj().T @ pattern
    if np.allclose(gram, k * np.eye(n), atol=1e-10 * k):
        pinv_t = pattern.conj() / k
    else:
        if np.linalg.matrix_rank(pattern) < n:
            raise IdentifiabilityError(
                "activation pattern is rank-deficient; estimates are not "
                "unique without full column rank"
            )
        pinv_t = np.linalg.pinv(pattern.T)
    return mode_unfold(received, 2).T @ pinv_t


def hosvd_sti(
    y_filtered: np.ndarray,
    rx_antennas: int,
    tx_antennas: int,
    frames: int,
) -> FactorEstimates:
    """Closed-form factor estimates from matched-filtered data.

    Parameters
    ----------
    y_filtered : (L*M*P, N) ndarray
        Output of :func:`matched_filter`. Column n is the vectorized
        rank-one tensor ris_rx[:, n] o tx_ris[:, n] o impairments[:, n]
        plus noise.
    rx_antennas, tx_antennas, frames : int
        Dimensions L, M, P used to fold each column back into an
        (L, M, P) tensor.

    Returns
    -------
    FactorEstimates
        Per column, the dominant rank-one component of the column tensor's
        higher-order SVD: each factor is the leading left singular vector
        of the corresponding unfolding, scaled by the principal cube root
        of the leading core entry. The three per-column scale factors
        multiply to 1 by construction. The N columns are independent
        subproblems; they are solved as one batched SVD per mode, which
        is order-independent.
    """
    l, m, p = rx_antennas, tx_antennas, frames
    n = y_filtered.shape[1]
    if y_filtered.shape[0] != l * m * p:
        raise ValueError(
            f"y_filtered has {y_filtered.shape[0]} rows, expected "
            f"L*M*P = {l * m * p}"
        )
    # column tensors, first index fastest: t[:, :, :, col]
    t = y_filtered.reshape(l, m, p, n, order="F")
    # a fully blocked element zeroes its column up to cancellation residue
    col_norms = np.linalg.norm(y_filtered, axis=0)
    degenerate = tuple(
        int(c) for c in np.flatnonzero(col_norms <= 1e-12 * col_norms.max())
    )
    # batched mode-wise unfoldings (column axis leads the batch)
    unf1 = t.transpose(3, 0, 1, 2).reshape(n, l, m * p)
    unf2 = t.transpose(3, 1, 0, 2).reshape(n, m, l * p)
    unf3 = t.transpose(3, 2, 0, 1).reshape(n, p, l * m)
    u1 = np.linalg.svd(unf1, full_matrices=False)[0][:, :, 0]
    u2 = np.linalg.svd(unf2, full_matrices=False)[0][:, :, 0]
    u3 = np.linalg.svd(unf3, full_matrices=False)[0][:, :, 0]
    core = np.einsum("lmpn,nl,nm,np->n", t, u1.conj(), u2.conj(), u3.conj())
    scale = core ** (1.0 / 3.0)  # principal branch
    ris_rx = scale * u1.T
    tx_ris = scale * u2.T
    impairments = scale * u3.T
    if degenerate:
        ris_rx[:, degenerate] = 0.0
        tx_ris[:, degenerate] = 0.0
        impairments[:, degenerate] = 0.0
    return FactorEstimates(
        ris_rx=ris_rx,
        tx_ris=tx_ris,
        impairments=impairments,
        method="hosvd-sti",
        degenerate_columns=degenerate,
    )


def estimate_hosvd_sti(received: np.ndarray, pattern: np.ndarray) -> FactorEstimates:
    """Matched filter followed by the closed-form per-column decomposition."""
    l, m, _, p = received.shape
    return hosvd_sti(matched_filter(received, pattern), l, m, p)


def bals(
    received: np.ndarray,
    pattern: np.ndarray,
    max_iters: int = 200,
    tol: float = 1e-6,
    rng: Optional[np.random.Generator] = None,
) -> FactorEstimates:
    """Bilinear alternating least squares assuming an ideal (imperfection-free) RIS.

    Parameters
    ----------
    received : (L, M, K, P) ndarray
        Received tensor.
    pattern : (K, N) ndarray
        Known activation schedule.
    max_iters : int
        Iteration cap; hitting it returns the best iterate with
        ``converged=False`` rather than failing.
    tol : float
        Stop once the relative reconstruction error changes by less than
        this fraction of its previous value between sweeps.
    rng : numpy Generator, optional
        Source for the i.i.d. complex Gaussian initialization of the
        tx-RIS factor.

    Returns
    -------
    FactorEstimates
        Channel factors only (``impairments`` is None) plus the sweep
        count and convergence flag.
    """
    l, m, k, p = received.shape
    n = pattern.shape[1]
    if k < n:
        raise IdentifiabilityError(
            f"pattern has K={k} blocks for N={n} elements; needs K >= N"
        )
    if rng is None:
        rng = np.random.default_rng()
    ones = np.ones((p, n), dtype=complex)
    h_hat = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)
    y1 = mode_unfold(received, 0)
    y2 = mode_unfold(received, 1)
    norm_y = np.linalg.norm(y1)

    best = None
    prev_err = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        g_hat = y1 @ np.linalg.pinv(khatri_rao(ones, khatri_rao(pattern, h_hat)).T)
        h_hat = y2 @ np.linalg.pinv(khatri_rao(ones, khatri_rao(pattern, g_hat)).T)
        recon = g_hat @ khatri_rao(ones, khatri_rao(pattern, h_hat)).T
        err = np.linalg.norm(y1 - recon) / norm_y
        if best is None or err <= best[0]:
            best = (err, g_hat, h_hat)
        if np.isfinite(prev_err) and abs(prev_err - err) < tol * max(prev_err, 1e-300):
            converged = True
            break
        prev_err = err

    _, g_hat, h_hat = best
    return FactorEstimates(
        ris_rx=g_hat,
        tx_ris=h_hat,
        impairments=None,
        method="bals",
        iterations=iterations,
        converged=converged,
    )


def clairvoyant(
    received: np.ndarray,
    channels: ChannelSet,
    impairments: np.ndarray,
    pattern: np.ndarray,
) -> FactorEstimates:
    """Lower-bound estimator: each factor re-fit with all others known exactly.

    One least-squares solve per factor against the corresponding unfolding,
    with the remaining factors fixed to their true values. This is an
    evaluation construct, not a deployable estimator.
    """
    l, m, k, p = received.shape
    g, h = channels.ris_rx, channels.tx_ris
    if g.shape[0] != l or h.shape[0] != m or pattern.shape[0] != k \
            or impairments.shape[0] != p:
        raise ValueError("ground-truth factor shapes do not match the tensor")
    basis_g = khatri_rao(impairments, khatri_rao(pattern, h))
    basis_h = khatri_rao(impairments, khatri_rao(pattern, g))
    basis_e = khatri_rao(pattern, khatri_rao(h, g))
    g_hat = mode_unfold(received, 0) @ np.linalg.pinv(basis_g.T)
    h_hat = mode_unfold(received, 1) @ np.linalg.pinv(basis_h.T)
    e_hat = mode_unfold(received, 3) @ np.linalg.pinv(basis_e.T)
    return FactorEstimates(
        ris_rx=g_hat, tx_ris=h_hat, impairments=e_hat, method="clairvoyant"
    )


def _column_scales(estimate: np.ndarray, truth: np.ndarray, skip) -> np.ndarray:
    n = estimate.shape[1]
    scales = np.full(n, np.nan, dtype=complex)
    for col in range(n):
        if col in skip:
            continue
        denom = np.vdot(estimate[:, col], estimate[:, col])
        if denom == 0.0:
            raise DegenerateInputError(
                f"estimated column {col} is zero and not flagged degenerate; "
                "cannot compute a scaling"
            )
        scales[col] = np.vdot(estimate[:, col], truth[:, col]) / denom
    return scales


def disambiguate(
    estimates: FactorEstimates,
    channels: ChannelSet,
    impairments: Optional[np.ndarray] = None,
):
    """Remove the per-column scaling ambiguity against ground truth.

    Applies the least-squares-optimal complex scalar per column and factor.
    Columns flagged degenerate keep their zero estimate (scalar reported as
    NaN). Returns the aligned estimates and the scalar report; for
    non-degenerate noiseless estimates the three scalars of each column
    multiply to 1.
    """
    skip = set(estimates.degenerate_columns)
    lam_g = _column_scales(estimates.ris_rx, channels.ris_rx, skip)
    lam_h = _column_scales(estimates.tx_ris, channels.tx_ris, skip)
    aligned_g = estimates.ris_rx * np.where(np.isnan(lam_g), 0.0, lam_g)
    aligned_h = estimates.tx_ris * np.where(np.isnan(lam_h), 0.0, lam_h)
    lam_e = None
    aligned_e = None
    if estimates.impairments is not None:
        if impairments is None:
            raise ValueError("true impairments required to align the estimate")
        lam_e = _column_scales(estimates.impairments, impairments, skip)
        aligned_e = estimates.impairments * np.where(np.isnan(lam_e), 0.0, lam_e)
    aligned = replace(
        estimates, ris_rx=aligned_g, tx_ris=aligned_h, impairments=aligned_e
    )
    report = DisambiguationReport(
        lambda_ris_rx=lam_g, lambda_tx_ris=lam_h, lambda_impairments=lam_e
    )
    return aligned, report


def normalize_first_entry(estimates: FactorEstimates) -> FactorEstimates:
    """Ground-truth-free convention: unit first entry for both channel factors.

    Scales each ris_rx and tx_ris column so its first entry equals 1 and
    pushes the compensating scalar into the impairment column, preserving
    the per-column three-way product. Requires nonzero first entries and an
    impairment estimate; intended for deployment-style reporting, not NMSE
    evaluation.
    """
    if estimates.impairments is None:
        raise ValueError("normalization needs an impairment estimate to absorb scales")
    g, h, e = estimates.ris_rx, estimates.tx_ris, estimates.impairments
    skip = set(estimates.degenerate_columns)
    g = g.copy()
    h = h.copy()
    e = e.copy()
    for col in range(g.shape[1]):
        if col in skip:
            continue
        if g[0, col] == 0.0 or h[0, col] == 0.0:
            raise DegenerateInputError(
                f"column {col} has a zero first entry; pick another convention"
            )
        scale_g, scale_h = g[0, col], h[0, col]
        g[:, col] /= scale_g
        h[:, col] /= scale_h
        e[:, col] *= scale_g * scale_h
    return replace(estimates, ris_rx=g, tx_ris=h, impairments=e)
