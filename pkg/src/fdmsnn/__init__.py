"""FDM memristive-crossbar spiking network co-simulator."""

__version__ = "0.1.0"
