"""Models of packet-switched quantum networks: hybrid frames, switching and noisy distribution."""

__version__ = "0.1.0"
