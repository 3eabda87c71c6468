"""Core package: expressions, metrics, quasi-linear flows, hodograph solves, geodesics."""
