"""Single-node capacity expansion with VRE, storage and dual-based prices."""

__version__ = "0.1.0"
