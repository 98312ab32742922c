"""
Simulation and verification toolkit for discrete and continuum wetting models.
Run ``python main.py --help`` from the repository root.
"""
