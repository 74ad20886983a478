"""Analysis library for nonlinear Markov processes and their Lyapunov functions"""

__version__ = "0.1.0"
