"""
Spectral curve of the deformed generator.
"""
