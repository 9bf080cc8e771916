"""
Entry point for running gcodec as a module.

This allows the application to be run with: python -m gcodec
"""

from .main import cli

if __name__ == "__main__":
    cli()
