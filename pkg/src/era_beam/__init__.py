"""Beampattern synthesis for arrays of pattern-reconfigurable antennas."""

__version__ = "0.1.0"
