#!/usr/bin/env python3
"""
Setup script for qssmix - quasi-self-similar mixing flows and anomalous dissipation experiments.
"""

from setuptools import setup, find_packages

setup(
    name="qssmix",
    version="0.1.0",
    description="Quasi-self-similar mixing flows and anomalous dissipation experiments",
    long_description="Area-preserving tubular maps of planar curves, 5-adic tilings of local mixing fields, "
                     "a pseudo-spectral advection-diffusion solver and a config-driven experiment harness "
                     "that measures scaling exponents and viscous dissipation.",
    long_description_content_type="text/plain",
    license="MIT",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.11",
        "pandas>=2.0",
    ],
    extras_require={
        "test": ["pytest>=7"],
    },
    entry_points={
        "console_scripts": [
            "qssmix = qssmix.harness.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
