"""
Test files for the Find Your CAD Model project.
"""
