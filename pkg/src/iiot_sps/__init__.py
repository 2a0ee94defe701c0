"""Discrete-event simulator of semi-persistent uplink scheduling for correlated IIoT traffic."""

__version__ = "0.1.0"
