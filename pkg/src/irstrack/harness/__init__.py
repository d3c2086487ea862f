"""Protocol orchestration, Monte-Carlo experiments and the command line."""

from .metrics import anmse, nmse
from .protocol import (
    ProtocolSchedule,
    TrialResult,
    continue_tracking,
    run_channel_estimation,
    run_first_stage,
    run_second_stage,
    training_overhead,
    trial_streams,
)

__all__ = [
    "nmse",
    "anmse",
    "ProtocolSchedule",
    "TrialResult",
    "training_overhead",
    "trial_streams",
    "run_first_stage",
    "continue_tracking",
    "run_second_stage",
    "run_channel_estimation",
]
