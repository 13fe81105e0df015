"""Local discrimination of orthonormal product states.

State ensembles, minimum-error measurements, optimality certificates and
exact evaluation of local measurement protocols with classical communication.
"""

__version__ = "0.1.0"
