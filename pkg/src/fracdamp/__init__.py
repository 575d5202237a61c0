"""Riemann-Liouville operators, test-function estimates and blow-up experiments
for the two-term problem ``D^alpha y + D^beta y = t^gamma |y|^m``."""

from __future__ import annotations

from fracdamp.blowup import BlowupReport, ScanCell, detect, estimate_blowup_time, scan
from fracdamp.fracops import (
    QuadratureBudget,
    SingularGridFunction,
    ibp_check,
    rl_left_derivative_grid,
    rl_left_integral_grid,
    rl_power_rule,
    rl_right_integral_at,
    rl_right_integral_grid,
)
from fracdamp.oracles import (
    ThresholdSpec,
    bernoulli,
    in_theorem_range,
    ml_linear,
    power_ode,
    threshold_m_star,
)
from fracdamp.solver import (
    ManufacturedTarget,
    ProblemSpec,
    Trajectory,
    VolterraForm,
    manufactured_rhs,
    residual,
    solve,
    solve_single_term,
    to_volterra,
)
from fracdamp.specfun import (
    AccuracyError,
    SeriesAccuracy,
    gamma_fn,
    incomplete_beta,
    mittag_leffler,
)
from fracdamp.testfn import (
    CutoffProfile,
    LemmaBoundResult,
    check_lemma,
    choose_lambda,
    k1_bound,
    lemma8_integral,
    lemma9_integral,
    lemma_bound,
    profile_eval,
)

__all__ = [
    "AccuracyError",
    "BlowupReport",
    "CutoffProfile",
    "LemmaBoundResult",
    "ManufacturedTarget",
    "ProblemSpec",
    "QuadratureBudget",
    "ScanCell",
    "SeriesAccuracy",
    "SingularGridFunction",
    "ThresholdSpec",
    "Trajectory",
    "VolterraForm",
    "bernoulli",
    "check_lemma",
    "choose_lambda",
    "detect",
    "estimate_blowup_time",
    "gamma_fn",
    "ibp_check",
    "in_theorem_range",
    "incomplete_beta",
    "k1_bound",
    "lemma8_integral",
    "lemma9_integral",
    "lemma_bound",
    "manufactured_rhs",
    "mittag_leffler",
    "ml_linear",
    "power_ode",
    "profile_eval",
    "residual",
    "rl_left_derivative_grid",
    "rl_left_integral_grid",
    "rl_power_rule",
    "rl_right_integral_at",
    "rl_right_integral_grid",
    "scan",
    "solve",
    "solve_single_term",
    "threshold_m_star",
    "to_volterra",
]
