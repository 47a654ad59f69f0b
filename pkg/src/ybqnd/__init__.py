"""Simulation and inference toolkit for repetitive state-selective readout of
nuclear-spin qubits in optical tweezers.

Subpackages
-----------
atomic
    Angular-momentum algebra, polarizabilities, light shifts, excited-state
    mixing and fluorescence collection geometry.
rates, dynamics
    Probe-driven scattering and loss rates, and the two-level master equation.
circuits
    Shot-by-shot execution of readout/rotation/feedforward circuits.
analysis
    Mixture fitting, thresholds, conditional estimators, bootstrap and fits.
spam
    Probability-graph state-preparation-and-measurement correction.
"""

from __future__ import annotations

__version__ = "0.1.0"
