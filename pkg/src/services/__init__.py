"""
Pipelines tying audio, engines and metrics together
"""
