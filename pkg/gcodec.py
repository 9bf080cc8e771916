#!/usr/bin/env python3
"""
gcodec - Main entry point.

This is the main entry point for the gcodec application.
"""

from gcodec.main import cli

if __name__ == "__main__":
    cli()
