"""
gcodec - gated variable-rate learned image compression.
"""

__version__ = "1.0.0"
