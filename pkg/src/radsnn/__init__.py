"""Spiking-network reliability simulator.

Bit-accurate crossbar network with on-chip plasticity, a calibrated
single-event-upset fault model, TMR-protected memory, and the campaign
machinery to measure accuracy degradation over equivalent beam exposure.
"""

from .memory import SynapticMemory
from .network import Dataset, NetworkConfig, NeuronPool

__version__ = "0.1.0"

__all__ = ["Dataset", "NetworkConfig", "NeuronPool", "SynapticMemory", "__version__"]
