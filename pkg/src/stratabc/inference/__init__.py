"""Likelihood estimators, ABC-MCMC and ABC-SMC samplers, chain diagnostics."""
