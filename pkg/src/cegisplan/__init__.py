"""Counterexample-guided synthesis of blocksworld plans with a deductive verifier in the loop."""

from .pddl import (
    ARM_EMPTY,
    Atom,
    Clear,
    GoalSpec,
    Holding,
    InconsistentInit,
    InitMode,
    On,
    OnTable,
    PddlSyntaxError,
    Problem,
    SemanticError,
    WorldState,
    parse_problem,
    print_problem,
    state_from_init,
)
from .plan import Action, Plan, PickUp, PutDown, Stack, Unstack, parse_plan, print_plan
from .semantics import (
    Counterexample,
    Semantics,
    Status,
    Verdict,
    apply,
    minimal_infeasible_prefix,
    reachable_states,
    verify,
)

__version__ = "0.1.0"
