"""
Utility modules for the obstacle SPDE toolkit.
"""
