"""動径 k-Hessian 方程式 S_k(D²u) = λ(1-u)^q の解構造を調べる数値ライブラリ"""

__version__ = "0.1.0"

from .config import SolverConfig
from .errors import (
    BracketError,
    DomainError,
    HessianError,
    InsufficientRangeError,
    NumericError,
    RegimeError,
)
from .params import ProblemParams, Regime, RegimeTag, classify_regime, make_params
from .radial_ivp import VProfile, integrate_ivp
from .phase_plane import PhaseOrbit, to_phase, winding_count
from .solution import RadialSolution, SolutionSource
from .multiplicity import (
    BifurcationCurve,
    MultiplicityReport,
    PicardStatus,
    bifurcation_curve,
    count_solutions,
    estimate_lambda_star,
    picard_maximal,
    reconstruct_u,
    solve_all,
)

__all__ = [
    '__version__', 'SolverConfig',
    'HessianError', 'DomainError', 'RegimeError', 'NumericError',
    'InsufficientRangeError', 'BracketError',
    'ProblemParams', 'Regime', 'RegimeTag', 'classify_regime', 'make_params',
    'VProfile', 'integrate_ivp', 'PhaseOrbit', 'to_phase', 'winding_count',
    'RadialSolution', 'SolutionSource',
    'BifurcationCurve', 'MultiplicityReport', 'PicardStatus', 'bifurcation_curve',
    'count_solutions', 'estimate_lambda_star', 'picard_maximal', 'reconstruct_u', 'solve_all',
]
