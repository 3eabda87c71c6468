"""Top-level package for the geodesic-integrals toolkit (makes `src` a package)."""
