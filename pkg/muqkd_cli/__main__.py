"""
Entry point for running muqkd_cli as a module
"""

from .cli import run

if __name__ == "__main__":
    run()
