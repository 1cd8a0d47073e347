"""Exception hierarchy shared across the package.

Every error a caller is expected to branch on gets its own class; the CLI
and HTTP layers map these onto exit codes and status codes respectively.
"""

from __future__ import annotations


class BayesCloudError(Exception):
    """Base class for all package errors."""

    code = "error"


# --------------------------------------------------------------------------
# Script language errors (parsing / evidence)


class ScriptError(BayesCloudError):
    """A problem in script source, with a position when one is known."""

    code = "script_error"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class ScriptSyntaxError(ScriptError):
    code = "syntax_error"

    def __init__(self, message, line=None, column=None, expected=None):
        self.expected = expected
        if expected is not None:
            message = f"{message} (expected {expected})"
        super().__init__(message, line, column)


class DuplicateNode(ScriptError):
    code = "duplicate_node"

    def __init__(self, name: str, line=None, column=None):
        self.name = name
        super().__init__(f"node '{name}' is defined more than once", line, column)


class UnknownStateReference(ScriptError):
    code = "unknown_state"

    def __init__(self, node: str, state: str, line=None, column=None):
        self.node = node
        self.state = state
        super().__init__(f"state '{state}' is not declared for node '{node}'", line, column)


class ProbabilityOutOfRange(ScriptError):
    code = "probability_out_of_range"

    def __init__(self, value: float, line=None, column=None):
        self.value = value
        super().__init__(f"probability {value!r} is outside [0, 1]", line, column)


class DuplicateAssignment(ScriptError):
    code = "duplicate_assignment"

    def __init__(self, name: str, line=None, column=None):
        self.name = name
        super().__init__(f"variable '{name}' is assigned more than once", line, column)


# --------------------------------------------------------------------------
# Model construction errors


class CompileError(BayesCloudError):
    code = "compile_error"


class CycleError(CompileError):
    code = "cycle"

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("directed cycle: " + " -> ".join(self.cycle + self.cycle[:1]))


class IncompleteTable(CompileError):
    code = "incomplete_table"

    def __init__(self, variable: str, configuration: tuple):
        self.variable = variable
        self.configuration = tuple(configuration)
        super().__init__(
            f"variable '{variable}' has no distribution for parent configuration {self.configuration!r}"
        )


class RowNotNormalized(CompileError):
    code = "row_not_normalized"

    def __init__(self, variable: str, configuration: tuple, total: float):
        self.variable = variable
        self.configuration = tuple(configuration)
        self.total = total
        super().__init__(
            f"probabilities for '{variable}' at configuration {self.configuration!r} sum to {total!r}"
        )


class UnknownParentState(CompileError):
    code = "unknown_parent_state"

    def __init__(self, variable: str, parent: str, state: str | None):
        self.variable = variable
        self.parent = parent
        self.state = state
        if state is None:
            msg = f"'{variable}' conditions on '{parent}', which has no discrete states"
        else:
            msg = f"'{variable}' conditions on '{parent}' being '{state}', which is not one of its states"
        super().__init__(msg)


class UnknownParent(CompileError):
    code = "unknown_parent"

    def __init__(self, variable: str, parent: str):
        self.variable = variable
        self.parent = parent
        super().__init__(f"'{variable}' references '{parent}', which is not defined")


class InvalidDomain(CompileError):
    code = "invalid_domain"


class InvalidDistribution(CompileError):
    code = "invalid_distribution"


# --------------------------------------------------------------------------
# Inference errors


class InferenceError(BayesCloudError):
    code = "inference_error"


class UnknownVariable(InferenceError):
    code = "unknown_variable"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable '{name}' is not in the network")


class UnknownState(InferenceError):
    code = "unknown_state"

    def __init__(self, variable: str, value):
        self.variable = variable
        self.value = value
        super().__init__(f"value {value!r} is not valid for variable '{variable}'")


class IncompleteAssignment(InferenceError):
    code = "incomplete_assignment"

    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__("assignment is missing variables: " + ", ".join(self.missing))


class ZeroProbabilityEvidence(InferenceError):
    code = "zero_probability_evidence"


class NonLeafContinuousEvidence(InferenceError):
    code = "non_leaf_continuous"


class ContinuousVariablesPresent(BayesCloudError):
    """Raised by operations restricted to all-discrete networks."""

    code = "continuous_variables_present"


# --------------------------------------------------------------------------
# Merge errors


class MergeError(BayesCloudError):
    code = "merge_error"


class DomainMismatch(MergeError):
    code = "domain_mismatch"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"shared variable '{name}' has incompatible domains")


class SharedVariablesPresent(MergeError):
    code = "shared_variables_present"


class EmptySharedSet(MergeError):
    code = "empty_shared_set"


class StateSpaceTooLarge(MergeError):
    code = "state_space_too_large"

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"joint product space has {size} states, above the cap of {cap}")


class CycleInUnion(MergeError):
    code = "cycle_in_union"

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__(
            "arc union is cyclic: " + " -> ".join(self.cycle + self.cycle[:1])
        )


class NotConverged(MergeError):
    code = "not_converged"

    def __init__(self, iterations: int, last_improvement: float, tolerance: float):
        self.iterations = iterations
        self.last_improvement = last_improvement
        self.tolerance = tolerance
        super().__init__(
            f"objective still improving by {last_improvement:.3g} (> {tolerance:.3g}) "
            f"after {iterations} iterations"
        )


class EmptySupport(MergeError):
    code = "empty_support"


# --------------------------------------------------------------------------
# Learning errors


class LearnError(BayesCloudError):
    code = "learn_error"


class EmptyDataset(LearnError):
    code = "empty_dataset"


class DataDomainError(LearnError):
    code = "data_domain_error"


# --------------------------------------------------------------------------
# Corpus errors


class InvalidParams(BayesCloudError):
    code = "invalid_params"


class UnknownRegion(BayesCloudError):
    code = "unknown_region"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"region '{name}' is not in the model")


# --------------------------------------------------------------------------
# Registry errors


class RegistryError(BayesCloudError):
    code = "registry_error"


class NotFound(RegistryError):
    code = "not_found"

    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"no model with id '{record_id}'")


class InvalidScript(RegistryError):
    code = "invalid_script"

    def __init__(self, diagnostics: str, line: int | None = None, column: int | None = None):
        self.diagnostics = diagnostics
        self.line = line
        self.column = column
        super().__init__(f"script rejected: {diagnostics}")


class MissingTitle(RegistryError):
    code = "missing_title"

    def __init__(self):
        super().__init__("a model record needs a non-empty title")
