"""
Tests package for the Dual Curriculum Design laboratory
"""
