"""Solvers for two-stage stochastic integer programs with bi-parameterized
recourse: the first-stage decision enters both the objective and the
constraint right-hand side of the second stage."""

__version__ = "0.1.0"
