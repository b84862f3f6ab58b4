"""Shared helpers for drawing random stable VAR systems."""
import numpy as np

from sparsevar import VarCoefficients

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def stable_coeffs(rng, k: int, p: int, radius: float = 0.7,
                  density: float = 1.0, intercept_scale: float = 0.0):
    """Random VAR coefficients rescaled to an exact companion spectral radius.

    Scaling lag l by c**l scales every companion eigenvalue by c, so the
    draw's radius can be set exactly. density < 1 zeroes a random subset of
    entries before rescaling.
    """
    from sparsevar import is_stable

    while True:
        lags = rng.normal(size=(p, k, k))
        if density < 1.0:
            lags *= rng.random(size=(p, k, k)) < density
        nu = intercept_scale * rng.normal(size=k)
        coeffs = VarCoefficients(intercept=nu, lags=lags)
        _, raw_radius = is_stable(coeffs)
        if raw_radius > 0:
            break
    scale = radius / raw_radius
    scaled = np.stack([lags[l] * scale ** (l + 1) for l in range(p)])
    return VarCoefficients(intercept=nu, lags=scaled)


def random_covariance(rng, k: int, scale: float = 1.0):
    """Random symmetric positive definite matrix."""
    root = rng.normal(size=(k, k))
    return scale * (root @ root.T + k * np.eye(k))
