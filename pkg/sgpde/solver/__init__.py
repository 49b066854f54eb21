"""
Kernel calculus, assembly, low-rank inverses, Gauss-Newton and the ELBO.
"""
