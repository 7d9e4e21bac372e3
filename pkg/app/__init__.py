"""
Dual Curriculum Design laboratory - App Package
"""
