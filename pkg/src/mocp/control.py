"""Discretized control signals on uniform time grids."""

from dataclasses import dataclass

import numpy as np


def time_grid(t0, te, dt):
    """Uniform grid t0, t0+dt, ..., te; (te-t0)/dt must be integral."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = (te - t0) / dt
    n = int(round(steps))
    if n < 1 or abs(steps - n) > 1e-9 * max(1.0, abs(steps)):
        raise ValueError(f"(te-t0)/dt = {steps} is not a whole number of steps")
    return t0 + dt * np.arange(n + 1)


def sampled_derivative(values, dt):
    """Central differences in the interior, one sided at both ends."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dt)
    out[0] = (values[1] - values[0]) / dt
    out[-1] = (values[-1] - values[-2]) / dt
    return out


@dataclass
class ControlSignal:
    """Control gamma(t) sampled on the uniform grid over [t0, te].

    The optional rate array v holds samples of dgamma/dt; when absent it
    is derived by central differences (one sided at the ends).
    """
    t0: float
    te: float
    dt: float
    gamma: np.ndarray
    v: np.ndarray = None

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        grid = time_grid(self.t0, self.te, self.dt)
        if self.gamma.shape != grid.shape:
            raise ValueError(
                f"gamma has {self.gamma.shape[0]} samples, grid needs {grid.shape[0]}"
            )
        if self.v is not None:
            self.v = np.asarray(self.v, dtype=float)
            if self.v.shape != grid.shape:
                raise ValueError("rate samples must match the time grid")

    @property
    def times(self):
        return time_grid(self.t0, self.te, self.dt)

    @property
    def n_steps(self):
        return self.gamma.shape[0] - 1

    def rate(self):
        """Rate samples: stored v if present, else central differences."""
        if self.v is not None:
            return self.v
        return sampled_derivative(self.gamma, self.dt)

    def with_rate(self):
        if self.v is not None:
            return self
        return ControlSignal(self.t0, self.te, self.dt, self.gamma, self.rate())


def zero_control(t0, te, dt):
    n = time_grid(t0, te, dt).shape[0]
    return ControlSignal(t0, te, dt, np.zeros(n), np.zeros(n))


def control_from_rate(t0, te, dt, v, gamma0=0.0):
    """Integrate rate samples by the trapezoid rule to a ControlSignal."""
    v = np.asarray(v, dtype=float)
    grid = time_grid(t0, te, dt)
    if v.shape != grid.shape:
        raise ValueError("rate samples must match the time grid")
    gamma = np.empty_like(v)
    gamma[0] = gamma0
    gamma[1:] = gamma0 + np.cumsum(0.5 * dt * (v[1:] + v[:-1]))
    return ControlSignal(t0, te, dt, gamma, v)
