"""Bayesian network scripting, inference, model integration, learning, and a
shareable model registry."""

from . import errors
from .bnscript import (
    Conditional,
    Continuous,
    Discrete,
    Evidence,
    GaussianLiteral,
    Guard,
    ModelAst,
    NodeDef,
    TableLiteral,
    parse_evidence,
    parse_model,
    serialize_evidence,
    serialize_model,
)
from .core import (
    BayesianNetwork,
    ClgRow,
    ClgSpec,
    DiscreteTable,
    ValidationReport,
    Variable,
    build_network,
    compile_model,
    compile_script,
    joint_probability,
    log_joint_probability,
    network_to_ast,
    network_to_script,
    validate,
)
from .corpus import (
    GeoParams,
    build_corpus,
    build_corpus_models,
    generate_geospatial,
    region_name,
    run_scenario,
)
from .inference import (
    Categorical,
    Dataset,
    GaussianMixture,
    Marginals,
    eliminate,
    enumerate_assignments,
    gibbs_query,
    infer_clg_leaf,
    joint_query,
    marginals_to_json,
    posterior,
    sample_forward,
)
from .integration import (
    MergeReport,
    MergeRequest,
    merge,
    merge_disjoint,
    merge_optimize,
    merge_simulate,
    rebuild_cpds,
    shared_variables,
)
from .learning import (
    LearnOptions,
    bic_score,
    family_scores,
    fit_parameters,
    learn_parameters,
    learn_structure,
)
from .registry import ModelRecord, Registry
from .service import ApiServer, remote_infer, remote_merge

__version__ = "0.1.0"
