"""
Settings and validated run configuration
"""
