"""Control allocation and full-pose tracking for thrust-vectoring modular team UAVs."""
