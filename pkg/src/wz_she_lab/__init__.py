"""Numerical laboratory for smooth-noise approximations of the stochastic heat equation.

Submodules:
    mollifier       smooth bump kernel, rescalings, covariance tables
    noise           grid white noise and its mollifications
    brownian        Brownian paths, local times, Tanaka approximation
    functionals     additive functionals and the renormalization constants
    solver          regularized-equation solvers (finite differences, Feynman-Kac)
    she             limiting stochastic heat equation (Ito scheme, chaos expansion)
    homogenization  intermediate-scale family and Edwards-Wilkinson fluctuations
    experiments     orchestration, configs, reports
"""

__version__ = "0.1.0"
