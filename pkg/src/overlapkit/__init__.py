"""Toolkit for overlap-based coherence and dimension witnesses.

Modules
-------
states
    Pure/mixed state primitives, overlaps, depolarizing channel,
    Haar sampling, seeded randomness.
inequalities
    Event-graph inequality functionals (the h_n family, the pentagon
    functional, the robust three-state functional) and classification.
optimize
    Pure-state maximization, the quadratic spectrahedron bound, Haar
    sampling experiments, dimension-threshold tables.
interrogation
    Interaction-free interrogation efficiencies, depolarizing-noise
    robustness, hexagon preparation fragments.
mesh
    Rectangular interferometer composition/decomposition, qudit
    preparation circuits, photon-count overlap estimation, angle-noise
    dispersion, thermo-optic calibration.
serialize
    JSON/CSV round-tripping for all value types.
cli
    Command-line entry points with seeded, replayable runs.
"""

__version__ = "0.1.0"
