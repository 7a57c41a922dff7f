"""
******************
***   CotLab   ***
******************

Numerical laboratory for the cotangent sums c0(r/b), the function g(alpha) = sum_l (1 - 2{l alpha})/l, continued
fractions of alpha and the moments of the limiting law of c0(r/b)/b.
"""
__author__ = 'CotLab developers'
__description__ = 'Cotangent sums and the moments of their limiting law'
__version__ = '0.1.0'

from .lab import LabConfig
from .run import run
from .cli import main
