"""
Quality metrics and synthetic test material
"""
