"""Tests for flatcalc."""
