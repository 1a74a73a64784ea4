"""
Numerical engine: heat kernel, noise, penalized solver, PSOR oracle,
Monte Carlo verification and the lemma suite.
"""

from .kernel import apply_resolvent, apply_semigroup, approximate_potential, exp_average
from .noise import sample_backward_noise, sample_forward_paths
from .problem import build_problem, validate_hypotheses
from .psor import psor_oracle
from .solver import penalization_sweep, solve_penalized, step_backward

__all__ = [
    'apply_semigroup', 'apply_resolvent', 'approximate_potential', 'exp_average',
    'sample_backward_noise', 'sample_forward_paths', 'build_problem', 'validate_hypotheses',
    'psor_oracle', 'penalization_sweep', 'solve_penalized', 'step_backward',
]
