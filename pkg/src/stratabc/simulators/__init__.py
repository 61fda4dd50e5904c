"""Benchmark simulators: Gaussian toy, g-and-k, Ising, Lotka-Volterra."""
