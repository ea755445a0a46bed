#!/usr/bin/env python3
"""
Setup script for spinelab.
"""

from setuptools import setup

if __name__ == "__main__":
    setup()
