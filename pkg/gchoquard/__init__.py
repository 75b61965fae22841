"""
gchoquard - ground states of the Grushin-Choquard equation on bi-radial grids.
"""

__version__ = "0.1.0"
from .interface.engine import GrushinChoquardEngine
__all__ = ['GrushinChoquardEngine']
