"""Single-qubit Kraus channels.

Five channels, each parameterised by a probability kappa in [0, 1]:

    amplitude_damping   {[[1,0],[0,sqrt(1-k)]], sqrt(k).[[0,1],[0,0]]}
    bit_flip            {sqrt(1-k) I, sqrt(k) X}
    phase_flip          {sqrt(1-k) I, sqrt(k) Z}
    bit_phase_flip      {sqrt(1-k) I, sqrt(k) Y}
    depolarizing        {sqrt(1-k) I, sqrt(k/3) X, sqrt(k/3) Y, sqrt(k/3) Z}

The depolarizing weights make the channel fully mixing at kappa = 3/4,
not at 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AMPLITUDE_DAMPING = "amplitude_damping"
BIT_FLIP = "bit_flip"
PHASE_FLIP = "phase_flip"
BIT_PHASE_FLIP = "bit_phase_flip"
DEPOLARIZING = "depolarizing"

CHANNEL_KINDS = (
    AMPLITUDE_DAMPING,
    BIT_FLIP,
    PHASE_FLIP,
    BIT_PHASE_FLIP,
    DEPOLARIZING,
)

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class ChannelCompletenessError(ValueError):
    """sum E^dag E deviates from the identity."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"Kraus completeness violated: max residual {residual:.3e}")


@dataclass(frozen=True)
class NoiseChannel:
    kind: str
    kappa: float

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(
                f"unknown channel kind {self.kind!r}; expected one of {CHANNEL_KINDS}"
            )
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must be in [0, 1], got {self.kappa}")


def kraus_operators(channel: NoiseChannel) -> list[np.ndarray]:
    kappa = channel.kappa
    if channel.kind == AMPLITUDE_DAMPING:
        decay = np.sqrt(kappa) * np.array([[0, 1], [0, 0]], dtype=complex)
        keep = np.array([[1, 0], [0, np.sqrt(1 - kappa)]], dtype=complex)
        return [keep, decay]
    if channel.kind == BIT_FLIP:
        return [np.sqrt(1 - kappa) * _I, np.sqrt(kappa) * _X]
    if channel.kind == PHASE_FLIP:
        return [np.sqrt(1 - kappa) * _I, np.sqrt(kappa) * _Z]
    if channel.kind == BIT_PHASE_FLIP:
        return [np.sqrt(1 - kappa) * _I, np.sqrt(kappa) * _Y]
    if channel.kind == DEPOLARIZING:
        third = np.sqrt(kappa / 3.0)
        return [np.sqrt(1 - kappa) * _I, third * _X, third * _Y, third * _Z]
    raise AssertionError(f"unhandled channel kind {channel.kind}")


def validate_channel(kraus: list[np.ndarray]) -> None:
    """Check trace preservation: ||sum E^dag E - I||_max <= 1e-12."""
    if not kraus:
        raise ValueError("empty Kraus operator list")
    dim = kraus[0].shape[0]
    for op in kraus:
        if op.shape != (dim, dim):
            raise ValueError("Kraus operators must be square and of equal dimension")
    total = sum(op.conj().T @ op for op in kraus)
    residual = float(np.abs(total - np.eye(dim)).max())
    if residual > 1e-12:
        raise ChannelCompletenessError(residual)


def channel_from_name(name: str, kappa: float) -> NoiseChannel | None:
    """Config-file channel names; "none" means no channel."""
    if name == "none":
        return None
    return NoiseChannel(kind=name, kappa=kappa)
