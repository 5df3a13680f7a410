"""
CLI Package

Command line front door: ``curesimex <command>`` or ``python -m curesimex``.
"""
