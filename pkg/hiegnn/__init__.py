"""
Hierarchical graph attention networks for text classification.
"""

__version__ = "1.0.0"
