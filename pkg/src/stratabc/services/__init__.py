"""Orchestration behind the command line: experiments, sweeps, batches and plot data."""
