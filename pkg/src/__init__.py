"""
nctf-dereverb: blind single-channel speech dereverberation
"""

__version__ = "0.1.0"
