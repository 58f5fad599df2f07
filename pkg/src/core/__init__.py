"""
Numerical core of nctf-dereverb
"""
