"""
MUQKD CLI - Monte Carlo simulator for multi-user QKD network cells
"""

__version__ = "1.0.0"
__author__ = "MUQKD CLI Team"
