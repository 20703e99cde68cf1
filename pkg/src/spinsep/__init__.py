"""Collective-spin dynamics near classical separatrices.

Modules:

* :mod:`spinsep.spin_core` builds Dicke-basis operators, Hamiltonians and states.
* :mod:`spinsep.dynamics` propagates states and records moments.
* :mod:`spinsep.metrology` computes squeezing, Fisher information and fidelities.
* :mod:`spinsep.classical_flow` analyses the mean-field flow on the sphere.
* :mod:`spinsep.timescales` gives closed-form preparation times.
* :mod:`spinsep.gaussian_qsl` covers Gaussian speed limits near the saddle.
* :mod:`spinsep.pspin` maps critical couplings of p-order models.
* :mod:`spinsep.cli` is the command-line driver.
"""

__version__ = "0.1.0"
