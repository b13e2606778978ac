"""
Transaction arrival processes: homogeneous Poisson and the two-state
Markov-modulated Poisson process (MMPP2) used for correlated arrivals.
"""
from dataclasses import dataclass

import numpy as np

from simulate.models import ArrivalKind, ArrivalModel

LOW, HIGH = 0, 1


@dataclass(frozen=True)
class ArrivalTrace:
    """
    Arrival times plus the path of the modulating chain.

    ``segment_starts[k]`` is when the chain entered ``segment_states[k]``;
    the first segment starts at 0.
    """
    times: np.ndarray
    segment_starts: np.ndarray
    segment_states: np.ndarray

    def __len__(self):
        return len(self.times)


def modulating_path(model: ArrivalModel, horizon, rng):
    if model.kind is ArrivalKind.POISSON:
        return np.zeros(1), np.zeros(1, dtype=np.int8)

    # start from the stationary distribution of the chain
    state = HIGH if rng.random() < model.high_state_probability else LOW
    starts, states = [0.0], [state]
    clock = 0.0
    while True:
        leave_rate = model.switch_down if state == HIGH else model.switch_up
        clock += rng.exponential(1.0 / leave_rate)
        if clock >= horizon:
            break
        state = LOW if state == HIGH else HIGH
        starts.append(clock)
        states.append(state)
    return np.asarray(starts), np.asarray(states, dtype=np.int8)


def generate_arrivals(model: ArrivalModel, horizon, rng) -> ArrivalTrace:
    """
    Arrivals on [0, horizon). Within each sojourn of the chain the process is
    homogeneous, so the count is Poisson and the points are uniform.
    """
    starts, states = modulating_path(model, horizon, rng)
    lengths = np.append(starts[1:], horizon) - starts
    if model.kind is ArrivalKind.POISSON:
        rates = np.full(len(starts), model.rate)
    else:
        rates = np.where(states == HIGH, model.rate_high, model.rate_low)

    counts = rng.poisson(rates * lengths)
    offsets = rng.random(int(counts.sum())) * np.repeat(lengths, counts)
    times = np.unique(np.repeat(starts, counts) + offsets)
    times = times[times < horizon]
    return ArrivalTrace(times=times, segment_starts=starts, segment_states=states)


def sample_arrivals(model: ArrivalModel, horizon, seed) -> np.ndarray:
    """
    Strictly increasing arrival timestamps (seconds) in [0, horizon).
    """
    return generate_arrivals(model, horizon, np.random.default_rng(seed)).times
