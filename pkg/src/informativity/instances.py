"""Random small integer instances for soak and property tests.

Each instance is simulated from a true system, so its data are consistent
by construction and the true ``A`` is a member of the compatible family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import DataSet, NoisePattern, SystemStructure, simulate


@dataclass(frozen=True)
class InstanceConfig:
    max_n: int = 4
    max_m: int = 2
    max_p: int = 2
    max_T: int = 8
    max_noise: int = 2
    entry_bound: int = 3


@dataclass(eq=False)
class Instance:
    A_true: np.ndarray
    sys: SystemStructure
    data: DataSet
    pattern: NoisePattern


def _ints(rng, bound, shape):
    return rng.integers(-bound, bound + 1, size=shape).astype(float)


def _noise_matrices(rng, pattern, n, p, r, bound):
    if pattern is NoisePattern.NOISELESS:
        return np.zeros((n, 0)), np.zeros((p, 0))
    E = _ints(rng, bound, (n, r))
    F = np.zeros((p, r))
    if pattern is NoisePattern.GENERAL and p:
        F = _ints(rng, bound, (p, r))
        F[rng.integers(p), 0] = rng.choice([-1.0, 1.0])
        E[rng.integers(n), 0] = rng.choice([-1.0, 1.0])
    elif pattern is NoisePattern.INDEPENDENT_SPLIT and p:
        # the last column drives the output only
        E[:, -1] = 0.0
        F[:, -1] = _ints(rng, bound, p)
        F[rng.integers(p), -1] = rng.choice([-1.0, 1.0])
        if r > 1:
            E[rng.integers(n), 0] = rng.choice([-1.0, 1.0])
    else:
        E[rng.integers(n), 0] = rng.choice([-1.0, 1.0])
    return E, F


def random_instance(rng: np.random.Generator, pattern: NoisePattern | None = None,
                    cfg: InstanceConfig = InstanceConfig()) -> Instance:
    """Draw one instance; ``pattern`` defaults to a uniform choice."""
    if pattern is None:
        pattern = list(NoisePattern)[rng.integers(len(NoisePattern))]
    b = cfg.entry_bound
    n = int(rng.integers(1, cfg.max_n + 1))
    m = int(rng.integers(0, cfg.max_m + 1))
    p = int(rng.integers(0, cfg.max_p + 1))
    if pattern in (NoisePattern.GENERAL, NoisePattern.INDEPENDENT_SPLIT):
        p = max(p, 1)
    r = 0 if pattern is NoisePattern.NOISELESS else int(rng.integers(1, cfg.max_noise + 1))
    if pattern is NoisePattern.INDEPENDENT_SPLIT:
        r = max(r, 2) if rng.random() < 0.5 else 1
    T = int(rng.integers(1, cfg.max_T + 1))
    A = _ints(rng, b, (n, n))
    B = _ints(rng, b, (n, m))
    C = _ints(rng, b, (p, n))
    D = _ints(rng, b, (p, m)) if rng.random() < 0.5 else np.zeros((p, m))
    E, F = _noise_matrices(rng, pattern, n, p, r, b)
    sys = SystemStructure(B, C, D, E, F)
    x0 = _ints(rng, b, n)
    U = _ints(rng, b, (m, T))
    W = _ints(rng, b, (r, T))
    data = simulate(A, sys, x0, U, W)
    return Instance(A, sys, data, pattern)


def instance_stream(seed: int, count: int, cfg: InstanceConfig = InstanceConfig()):
    """``count`` instances cycling through the four noise patterns."""
    rng = np.random.default_rng(seed)
    patterns = list(NoisePattern)
    for k in range(count):
        yield random_instance(rng, patterns[k % len(patterns)], cfg)
