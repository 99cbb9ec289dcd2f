"""Shared test helpers and the cached simulation fixture."""

import time

import numpy as np
import pytest

from mmimo_coex.config import ScenarioConfig
from mmimo_coex.engine import run_simulation

DESK_SCALE = dict(n_drops=500, n_rounds=50, seed=1)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def brute_force_sinr(user, serving, active, links, powers, precoders, noise):
    """Independent SINR oracle: loop over every (transmitter, stream) pair and
    accumulate each scalar power term explicitly (no vector shortcuts)."""
    signal = 0.0
    interference = 0.0
    for t in active:
        g, h = links[(user, t)]
        w = precoders[t].W
        for k in range(w.shape[1]):
            amp = 0.0 + 0.0j
            for a in range(h.shape[0]):
                amp += np.conj(h[a, 0]) * w[a, k]
            term = powers[t] * g * (amp.real**2 + amp.imag**2)
            if t == serving and precoders[t].user_map[k] == user:
                signal += term
            else:
                interference += term
    return signal / (interference + noise)


@pytest.fixture(scope="session")
def sim_cache():
    """Run-once cache of desk-scale simulations keyed by scenario overrides."""
    cache = {}

    def get(scenario, p_tr, **overrides):
        key = (scenario, p_tr, tuple(sorted(overrides.items())))
        if key not in cache:
            cfg = ScenarioConfig(scenario=scenario, p_tr=p_tr, **DESK_SCALE, **overrides)
            start = time.perf_counter()
            results = run_simulation(cfg)
            cache[key] = (results, time.perf_counter() - start)
        return cache[key]

    return get
