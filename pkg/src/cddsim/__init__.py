"""Concatenated dynamical decoupling of encoded DFS gates in a spin bath.

The package compiles CDD/PDD pulse schedules around exchange-only gates on
four-qubit decoherence-free-subspace blocks, propagates them exactly with a
spin bath attached, and reports reduced-state fidelities.
"""
from __future__ import annotations

from .config import RunConfig, parse_config, serialize_config
from .dfs import (LogicalGate, build_gate, encode, gate_library, global_pulse_operator, logical_basis,
                  project_logical, synthesize_single_qubit_gate)
from .engine import (FidelityRecord, PropagatorCache, baseline_free, calibrate_bath_scaling,
                     decoupling_condition_residual, propagate, simulate)
from .model import SystemModel, build_geometry, build_h_b, build_h_sb, build_pulse
from .sequence import cdd_schedule, decouple_then_compute, decouple_while_compute, free_evolution_schedule, pdd_schedule
from .sweep import SweepGrid, contour_export, run_single, run_sweep, turning_point

__version__ = "0.1.0"
