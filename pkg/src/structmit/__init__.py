"""Structure-preserving error mitigation for layered variational circuits.

The calibration matrix is built from an identity-equivalent circuit that has
exactly the gate layout of the trained circuit, then inverted to correct the
trained circuit's measured distribution.
"""

__version__ = "0.1.0"
