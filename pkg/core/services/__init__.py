"""
Series derivation and validation services.
"""
