"""Shared builders for small randomized problem instances.

Dense-oracle tests need priors and signals whose dimensions are tiny
enough for literal Kronecker evaluation (M <= 5, N <= 4, L <= 3). The
builders here construct valid instances of the data model from raw
random matrices, bypassing the physical prior constructors.
"""

import numpy as np

from respirad.config import RadarConfig
from respirad.priors import BreathingPrior, ChannelPrior, PriorSet
from respirad.signal import StackedSignal

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def tiny_config(m_reps=5, n_ant=1, n_freq=4, rep_interval=0.1):
    return RadarConfig(
        num_antennas=n_ant,
        num_freq=n_freq,
        num_reps=m_reps,
        rep_interval=rep_interval,
    )


def random_orthonormal(rng, rows, cols):
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q


def random_unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    # fix the QR phase convention so the distribution is Haar
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_breathing_prior(rng, m_reps, rank):
    basis = random_orthonormal(rng, m_reps, rank)
    vals = np.sort(rng.uniform(0.5, 2.0, size=rank))[::-1].copy()
    cov_full = basis @ np.diag(vals) @ basis.T
    cov_full = 0.5 * (cov_full + cov_full.T)
    return BreathingPrior(cov_full=cov_full, basis=basis, eig_values=vals)


def random_channel_prior(rng, n_freq):
    u = random_unitary(rng, n_freq)
    vals = np.sort(rng.uniform(0.5, 2.0, size=n_freq))[::-1]
    cov = (u * vals) @ u.conj().T
    cov = 0.5 * (cov + cov.conj().T)
    return ChannelPrior(cov=cov, kind="synthetic", params={})


def random_priors(rng, m_reps, rank, n_freq, n_ant=1):
    breathing = random_breathing_prior(rng, m_reps, rank)
    channels = tuple(random_channel_prior(rng, n_freq) for _ in range(n_ant))
    return PriorSet(breathing=breathing, channels=channels)


def random_stacked(rng, config):
    data = rng.standard_normal(config.total_dim) + 1j * rng.standard_normal(
        config.total_dim
    )
    return StackedSignal(config, data.astype(np.complex128))


def stacked_from_cube(config, cube):
    """Stack an (M, K, N) cube repetition-major, antenna, frequency."""
    return StackedSignal(config, np.ascontiguousarray(cube).reshape(-1))
