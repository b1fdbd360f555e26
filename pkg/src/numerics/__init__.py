"""Numerical core: geometry, spaces, operators, calculus and evolution."""
