"""
Monte Carlo Lab Package

Simulation models, scenario presets and the study runner.
"""
