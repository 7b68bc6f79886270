"""Air-interface absolute time synchronization simulator."""

__version__ = "0.1.0"
