"""
WAV I/O and STFT framework
"""
