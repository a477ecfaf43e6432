#!/usr/bin/env python3
"""Run the COMET command-line interface."""
import sys

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
