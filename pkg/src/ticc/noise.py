"""Simplified hardware-noise model: global depolarizing damping of expectations.

Twirled gate noise is modeled as a multiplicative shrinkage of measured
expectation values toward zero, with the per-gate fault probability of the
native ZZPhase gate depending on its geometric angle. Readout bit flips are
applied on top of the damped outcome probabilities.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .circuits import Circuit


class NoiseMode(str, Enum):
    OFF = "off"
    GLOBAL_DEPOLARIZING = "global_depolarizing"


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    meas_flip0: float = 0.0   # P(read 1 | true 0)
    meas_flip1: float = 0.0   # P(read 0 | true 1)
    mode: NoiseMode = NoiseMode.OFF
    # generic (non-ZZPhase) two-qubit gates count as `generic_multiplier`
    # ZZPhase gates at the effective angle below
    generic_multiplier: float = 3.0
    generic_theta: float = 0.25  # |Theta|/pi units: 0.25 -> fault 0.62 p2
    default_gamma_d: int = 4     # controlled gates not yet decomposed

    def __post_init__(self):
        for name in ("p1", "p2", "meas_flip0", "meas_flip1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")

    @property
    def off(self) -> bool:
        return self.mode is NoiseMode.OFF

    def zzphase_fault(self, theta: float) -> float:
        """Fault probability of a ZZPhase gate with geometric angle theta."""
        return (1.52 * abs(theta) / np.pi + 0.24) * self.p2

    def generic_fault(self) -> float:
        return self.generic_multiplier * (1.52 * self.generic_theta + 0.24) * self.p2

    def to_dict(self) -> dict:
        return {
            "p1": self.p1, "p2": self.p2,
            "meas_flip0": self.meas_flip0, "meas_flip1": self.meas_flip1,
            "mode": self.mode.value,
            "generic_multiplier": self.generic_multiplier,
            "generic_theta": self.generic_theta,
            "default_gamma_d": self.default_gamma_d,
        }


def damping_factor(circuit: Circuit, noise: NoiseModel) -> float:
    """lambda = prod (1 - p_gate) over the circuit's gates.

    Single-qubit gates use p1; two-qubit gates use the angle-dependent
    ZZPhase fault when tagged, otherwise the generic-gate fault; controlled
    gates count as their recorded (or default) gamma_D generic gates.
    """
    if noise.off:
        return 1.0
    factor = 1.0
    for op in circuit.ops:
        if op.n_sites == 1:
            factor *= 1.0 - noise.p1
        elif op.control is not None:
            reps = op.gamma_d if op.gamma_d is not None else noise.default_gamma_d
            factor *= (1.0 - noise.generic_fault()) ** reps
        elif op.angle is not None:
            factor *= 1.0 - noise.zzphase_fault(op.angle)
        else:
            factor *= 1.0 - noise.generic_fault()
    return float(factor)


def readout_probability(p_true0: float, noise: NoiseModel) -> float:
    """P(read 0) after asymmetric measurement flips."""
    if noise.off:
        return p_true0
    return p_true0 * (1.0 - noise.meas_flip0) + (1.0 - p_true0) * noise.meas_flip1
