"""
The experiment harness: config files, sweeps, statistics, reports, CLI.
"""
