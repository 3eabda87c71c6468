"""Data package: example registry, JSON configs and result exporters."""
