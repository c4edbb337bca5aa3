"""
Distributed MAC Toolkit
=======================

Capacity-region checks, error exponents, GEP bounds and threshold-decoder
simulation for multiple-access channels with distributed (uncoordinated)
rate and input-distribution selection.

This package provides:
- Operational capacity-region predicates for a decoded user set
- Maximized error exponents for wrong-message, interference and misdetection events
- Upper bounds on the generalized error performance and their minimization over partitions
- A threshold decoder with Monte Carlo and exact-probability evaluation
- The ``dmac`` CLI for batch computations with reproducible run manifests

Main Components:
- config.py: Environment-driven settings
- models/: Channel, code ensemble, simulation and report dataclasses
- utils/: Information theory, exponents, bounds, decoder and simulator
- scripts/dmac_cli.py: Command-line interface
- tests/: unittest suite run with pytest

Usage:
    $ dmac region check --channel adder.json --ensemble ensemble.json --g 0,0 --rates 0.3,0.3
    $ dmac gaussian --K 2 --P 1,1 --N0 1 --r 0.3,0.3
"""

__version__ = '0.1.0'
__license__ = 'MIT'
