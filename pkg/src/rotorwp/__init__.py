"""Rotational wave packets of rigid and non-rigid rotors: coherent-state
construction, unitary evolution, fractional revivals and quantum carpets."""

from importlib import resources

__version__ = "0.1.0"


def bundled_levels_path():
    """Path of the shipped 238U ground-band level file."""
    return resources.files(__name__).joinpath("data", "u238_levels.txt")
