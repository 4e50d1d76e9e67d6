'''Exact and certified calculus for closed definite 3-forms in dimension 7.'''

__version__ = "0.1.0"
