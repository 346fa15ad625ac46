"""mmWave NC - network coding over multi-relay millimeter-wave access."""

__version__ = "0.1.0"
