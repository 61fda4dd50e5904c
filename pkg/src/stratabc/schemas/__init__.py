"""Pydantic models for experiment configs and run artifacts."""
