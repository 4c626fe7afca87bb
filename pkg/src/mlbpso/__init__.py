"""Handover-margin controller design for LTE mobility load balancing.

A semi-dynamic downlink simulator (:mod:`mlbpso.sim`) is driven by
load-dependent handover-margin surfaces (:mod:`mlbpso.control`) whose few
parameters are tuned by a two-objective particle swarm
(:mod:`mlbpso.mopso`, :mod:`mlbpso.harness`).
"""
__version__ = "0.1.0"
