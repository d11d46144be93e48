"""Turing patterns in a labor/capital cross-diffusion model with CES production."""

__version__ = "0.1.0"
