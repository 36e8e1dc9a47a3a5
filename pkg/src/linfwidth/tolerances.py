"""Numerical tolerances shared by every module."""

#: exact algebraic identities (group averages, additivity)
EXACT_TOL = 1e-9
#: geometric predicates (incidence, degeneracy, orthonormality)
GEOM_TOL = 1e-12
#: unit-norm check on caller-supplied vectors
UNIT_TOL = 1e-10
#: Monte Carlo acceptance width, in standard errors
MC_SIGMAS = 4.0
#: magnitude of the transversality jitter and the retry budget
JITTER = 1e-6
JITTER_RETRIES = 5
