"""
bellcert: device-independent certification of Bell-test statistics
"""

__version__ = "1.0.0"
