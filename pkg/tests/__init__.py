"""
Test configuration.
"""