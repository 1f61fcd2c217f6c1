"""
Setup script for MUQKD CLI
"""

from setuptools import setup, find_packages
from pathlib import Path

# Read the README file
readme_file = Path(__file__).parent / "README.md"
long_description = readme_file.read_text(encoding="utf-8") if readme_file.exists() else ""

setup(
    name="muqkd-cli",
    version="1.0.0",
    author="MUQKD CLI Team",
    description="Monte Carlo simulator for multi-user QKD network cells with a central quantum server",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(include=["muqkd_cli", "muqkd_cli.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    python_requires=">=3.8",
    install_requires=[
        "typer>=0.9.0",
        "rich>=13.0.0",
        "numpy>=1.22",
    ],
    extras_require={
        "dev": ["pytest>=7.0", "hypothesis>=6.0"],
    },
    entry_points={
        "console_scripts": [
            "muqkd=muqkd_cli.cli:run",
        ],
    },
    keywords="qkd quantum cryptography simulation cli",
)
