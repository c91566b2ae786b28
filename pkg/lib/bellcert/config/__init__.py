"""
This module provides an interface for loading and overriding run configuration of the toolkit.
"""
