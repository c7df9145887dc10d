"""Uplink training and channel estimation.

The base station observes a pilot matrix, correlates it against each
user's pilot sequence and forms either a pilot-matched (PM) or an LMMSE
estimate of the channel vector.  LMMSE needs the per-user correlation
matrices of the channel model; PM needs only the pilot power.
"""

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .array import ArrayGeometry
from .channel import ChannelStats, UserChannel, hbar_matrix

__all__ = [
    "Estimator",
    "PilotBook",
    "EstimationOutput",
    "training_observation",
    "correlate",
    "pm_estimate",
    "lmmse_matrices",
    "lmmse_estimate",
    "estimate_all",
]

SOLVE_RESIDUAL_TOL = 1e-9


class Estimator(enum.Enum):
    PM = "pm"
    LMMSE = "lmmse"


class EstimationError(RuntimeError):
    """LMMSE linear solve failed the residual check."""


@dataclass(frozen=True)
class PilotBook:
    """Unit-norm pilot sequences and per-user pilot powers.

    ``pilots`` has shape (tau_p, K); column k is user k's sequence.
    """

    pilots: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        pilots = np.asarray(self.pilots)
        powers = np.asarray(self.powers, dtype=float)
        if pilots.ndim != 2:
            raise ValueError("pilots must be a (tau_p, K) matrix")
        if powers.shape != (pilots.shape[1],):
            raise ValueError("one pilot power per user required")
        norms = np.linalg.norm(pilots, axis=0)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("pilot sequences must have unit norm")
        if np.any(powers <= 0):
            raise ValueError("pilot powers must be positive")
        object.__setattr__(self, "pilots", pilots.astype(complex))
        object.__setattr__(self, "powers", powers)

    @classmethod
    def dft(cls, n_users: int, tau_p: int, power: float = 1.0) -> "PilotBook":
        """Unit-norm DFT pilots, reused cyclically when K > tau_p.

        Cyclic reuse deliberately creates pilot contamination.
        """
        dft = np.fft.fft(np.eye(tau_p)) / np.sqrt(tau_p)
        cols = [dft[:, k % tau_p] for k in range(n_users)]
        return cls(pilots=np.stack(cols, axis=1), powers=np.full(n_users, power))

    @property
    def tau_p(self) -> int:
        return self.pilots.shape[0]

    @property
    def n_users(self) -> int:
        return self.pilots.shape[1]

    def gram(self) -> np.ndarray:
        """Matrix of pilot cross-correlations phi_i^H phi_k."""
        return self.pilots.conj().T @ self.pilots


@dataclass(frozen=True)
class EstimationOutput:
    """Per-user channel estimates plus the LMMSE matrices that made them."""

    estimates: np.ndarray  # (K, N_A)
    estimator: Estimator
    e_matrices: tuple | None = None  # per-user E_k, LMMSE only
    ry_matrices: tuple | None = None  # per-user R_{y,k}


def training_observation(
    channels: list[UserChannel] | np.ndarray,
    book: PilotBook,
    noise_var: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Received uplink pilot matrix, (N_A, tau_p).

    Sum over users of sqrt(power_k) h_k phi_k^H plus i.i.d. complex
    Gaussian noise of variance ``noise_var`` per entry.
    """
    h = np.stack([c.h if isinstance(c, UserChannel) else np.asarray(c) for c in channels])
    if h.shape[0] != book.n_users:
        raise ValueError("channel count does not match pilot book")
    n_a = h.shape[1]
    signal = (np.sqrt(book.powers)[:, None] * h).T @ book.pilots.conj().T
    noise = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal((n_a, book.tau_p)) + 1j * rng.standard_normal((n_a, book.tau_p))
    )
    return signal + noise


def correlate(y_pilot: np.ndarray, book: PilotBook, k: int) -> np.ndarray:
    """Pilot-correlated statistic y_{p,k} = Y_p phi_k."""
    if not 0 <= k < book.n_users:
        raise ValueError("user index out of range")
    return y_pilot @ book.pilots[:, k]


def pm_estimate(y_pk: np.ndarray, pilot_power: float) -> np.ndarray:
    """Pilot-matched estimate: correlation rescaled by the pilot amplitude."""
    if pilot_power <= 0:
        raise ValueError("pilot power must be positive")
    return y_pk / np.sqrt(pilot_power)


def lmmse_matrices(
    book: PilotBook,
    all_stats: list[ChannelStats],
    geom: ArrayGeometry,
    noise_var: float,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-user LMMSE filter E_k and correlation R_{y,k} of y_{p,k}.

    R_{y,k} collects every user's correlation matrix weighted by its pilot
    cross-correlation with user k, plus the noise floor; E_k is the
    Hermitian solve R_{y,k}^{-1} Hbar_k scaled by the pilot amplitude.
    Solved, never inverted explicitly; the residual is checked to 1e-9.
    """
    if noise_var <= 0:
        raise ValueError("noise variance must be positive for LMMSE")
    n = geom.n_elements
    hbars = [hbar_matrix(s, geom) for s in all_stats]
    cross = np.abs(book.gram()) ** 2  # |phi_i^H phi_k|^2
    e_list, ry_list = [], []
    for k in range(book.n_users):
        ry = noise_var * np.eye(n, dtype=complex)
        for i in range(book.n_users):
            ry = ry + book.powers[i] * cross[i, k] * hbars[i]
        e_k = np.sqrt(book.powers[k]) * scipy.linalg.solve(ry, hbars[k], assume_a="pos")
        residual = np.linalg.norm(ry @ e_k - np.sqrt(book.powers[k]) * hbars[k])
        scale = np.linalg.norm(hbars[k]) * np.sqrt(book.powers[k])
        if scale > 0 and residual > SOLVE_RESIDUAL_TOL * max(scale, 1.0):
            raise EstimationError(f"LMMSE solve residual {residual:.3e} for user {k}")
        e_list.append(e_k)
        ry_list.append(ry)
    return e_list, ry_list


def lmmse_estimate(
    y_pk: np.ndarray,
    k: int,
    book: PilotBook,
    all_stats: list[ChannelStats],
    geom: ArrayGeometry,
    noise_var: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """LMMSE estimate of user k's channel: h_hat = E_k^H y_{p,k}.

    Returns (h_hat, E_k, R_{y,k}).  Convenience wrapper that rebuilds the
    matrices; batch code should use :func:`lmmse_matrices` once.
    """
    e_list, ry_list = lmmse_matrices(book, all_stats, geom, noise_var)
    return e_list[k].conj().T @ y_pk, e_list[k], ry_list[k]


def estimate_all(
    y_pilot: np.ndarray,
    book: PilotBook,
    all_stats: list[ChannelStats],
    geom: ArrayGeometry,
    noise_var: float,
    estimator: Estimator,
) -> EstimationOutput:
    """Estimate every user's channel from one training observation."""
    if estimator is Estimator.PM:
        estimates = np.stack(
            [pm_estimate(correlate(y_pilot, book, k), book.powers[k]) for k in range(book.n_users)]
        )
        return EstimationOutput(estimates=estimates, estimator=estimator)
    e_list, ry_list = lmmse_matrices(book, all_stats, geom, noise_var)
    estimates = np.stack(
        [e_list[k].conj().T @ correlate(y_pilot, book, k) for k in range(book.n_users)]
    )
    return EstimationOutput(
        estimates=estimates,
        estimator=estimator,
        e_matrices=tuple(e_list),
        ry_matrices=tuple(ry_list),
    )
