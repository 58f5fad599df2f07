"""
Test suite for nctf-dereverb
"""
