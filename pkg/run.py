"""Entry point for the geodesic-integrals toolkit.

Usage:
    python run.py verify --example ex2-explicit
    python run.py solve --example ex1-implicit
    python run.py list
    python run.py --help
"""
import sys

from src.simulation.cli import main


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
