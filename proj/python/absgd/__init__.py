"""Curvature-adaptive batch size SGD engine (C++ core)."""

from ._core import (
    ConvexConstants,
    Dataset,
    Model,
    SchedulerConfig,
    SchedulerState,
    TimeBreakdown,
    __version__,
    breakdown_total,
    build_model,
    eta0_max,
    load_csv,
    lr_decay,
    on_epoch_end,
    power_iteration,
    scheduler_init,
    speedup,
    split,
    synth_blobs,
    theorem_bound,
    train,
)

__all__ = [
    "ConvexConstants",
    "Dataset",
    "Model",
    "SchedulerConfig",
    "SchedulerState",
    "TimeBreakdown",
    "__version__",
    "breakdown_total",
    "build_model",
    "eta0_max",
    "load_csv",
    "lr_decay",
    "on_epoch_end",
    "power_iteration",
    "scheduler_init",
    "speedup",
    "split",
    "synth_blobs",
    "theorem_bound",
    "train",
]
