"""Channel-optimized quantum error correction by alternating optimization."""

from .channels import (KrausChannel, Mode, average_channel, bit_flip_channel, ensemble,
                       identity_channel, new_channel, random_channel, reduce_kraus,
                       weighted_pauli_channel)
from .codes import no_recovery_blocks, repetition_code, standard_recovery
from .errors import QECError
from .metrics import (Encoding, Recovery, channel_fidelity, fidelity_from_distance,
                      indirect_distance, indirect_distance_expanded, kl_condition)
from .optim import (OptimizationReport, OptimizeOptions, algorithm1, algorithm2, gamma_rank,
                    gamma_to_delta, optimal_delta, optimal_encoding, optimal_recovery,
                    optimize_gamma)

__version__ = "0.1.0"

__all__ = [
    "KrausChannel", "Mode", "average_channel", "bit_flip_channel", "ensemble", "identity_channel",
    "new_channel", "random_channel", "reduce_kraus", "weighted_pauli_channel",
    "no_recovery_blocks", "repetition_code", "standard_recovery", "QECError",
    "Encoding", "Recovery", "channel_fidelity", "fidelity_from_distance", "indirect_distance",
    "indirect_distance_expanded", "kl_condition",
    "OptimizationReport", "OptimizeOptions", "algorithm1", "algorithm2", "gamma_rank",
    "gamma_to_delta", "optimal_delta", "optimal_encoding", "optimal_recovery", "optimize_gamma",
]
