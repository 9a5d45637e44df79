"""Look-Compute-Move robot simulation over exact rationals."""

from __future__ import annotations

from .algorithms import alg_oc_program, algo_iop_program, comil_program, get_program
from .engine import Model, Program, Snapshot, Action, Trace, WorldState, run, iter_run
from .geometry import Point, Transform, point
from .schedulers import (
    AdversaryParams,
    FramePolicy,
    Schedule,
    SchedulerKind,
    generate_async,
    generate_fsync,
    generate_ssync,
    ssync_to_async,
    validate_schedule,
)
from .problems import OCInstance, ILInstance, IOPInstance, Verdict, check_oc, check_il, check_iop
from .impossibility import iop_fcom_search, oc_oblot_witness
from .relations import ModelSched, derive, verify_claims

__all__ = [
    "Action",
    "AdversaryParams",
    "FramePolicy",
    "ILInstance",
    "IOPInstance",
    "Model",
    "ModelSched",
    "OCInstance",
    "Point",
    "Program",
    "Schedule",
    "SchedulerKind",
    "Snapshot",
    "Trace",
    "Transform",
    "Verdict",
    "WorldState",
    "alg_oc_program",
    "algo_iop_program",
    "check_il",
    "check_iop",
    "check_oc",
    "comil_program",
    "derive",
    "generate_async",
    "generate_fsync",
    "generate_ssync",
    "get_program",
    "iop_fcom_search",
    "iter_run",
    "oc_oblot_witness",
    "point",
    "run",
    "ssync_to_async",
    "validate_schedule",
    "verify_claims",
]

__version__ = "0.1.0"
