"""Core infrastructure: errors, results, parameter types, config, output."""
