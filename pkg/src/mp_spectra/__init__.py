"""Sample covariance spectra of correlated Gaussian data.

Simulation of equicovariant and explicit-covariance ensembles, the
Marchenko-Pastur law, exact Wick-sum moment oracles, cycle combinatorics
audits and the operator-norm limit laws.
"""
__version__ = "0.1.0"
