"""KMS states on Toeplitz and Cuntz-Krieger algebras of finite directed graphs."""

from .graph import (
    ComponentDecomposition,
    DirectedGraph,
    Edge,
    GraphError,
    GraphParseError,
    HereditarySet,
    Path,
    VertexMatrix,
    count_paths,
    decompose,
    hereditary_closure,
    load_graph,
    parse_graph,
    quotient_graph,
    vertex_matrix,
)
from .kms import (
    CylinderMeasure,
    KmsSimplex,
    KmsStateDescriptor,
    PhaseDiagram,
    cylinder_measure,
    evaluate_state,
    evaluate_word,
    kms_condition_check,
    kms_identity_scan,
    phase_diagram,
    quotient_recursion,
    simplex_at,
)
from .oprep import TruncatedRep, build_rep, check_homomorphism, verify_tck, weighted_trace
from .pathspace import PreimageGrowth, ThomsenBounds, preimage_counts, thomsen_bounds
from .spectral import ResolventVector, SpectralData, perron_vector, resolvent, spectral_radius
from .subinvariance import SubinvariancePolytope, enumerate_subinvariant, invariant_feasible
from .words import NormalForm, multiply, parse_word, reduce_word

__all__ = [
    "ComponentDecomposition",
    "DirectedGraph",
    "Edge",
    "GraphError",
    "GraphParseError",
    "HereditarySet",
    "Path",
    "VertexMatrix",
    "count_paths",
    "decompose",
    "hereditary_closure",
    "load_graph",
    "parse_graph",
    "quotient_graph",
    "vertex_matrix",
    "CylinderMeasure",
    "KmsSimplex",
    "KmsStateDescriptor",
    "PhaseDiagram",
    "cylinder_measure",
    "evaluate_state",
    "evaluate_word",
    "kms_condition_check",
    "kms_identity_scan",
    "phase_diagram",
    "quotient_recursion",
    "simplex_at",
    "TruncatedRep",
    "build_rep",
    "check_homomorphism",
    "verify_tck",
    "weighted_trace",
    "PreimageGrowth",
    "ThomsenBounds",
    "preimage_counts",
    "thomsen_bounds",
    "ResolventVector",
    "SpectralData",
    "perron_vector",
    "resolvent",
    "spectral_radius",
    "SubinvariancePolytope",
    "enumerate_subinvariant",
    "invariant_feasible",
    "NormalForm",
    "multiply",
    "parse_word",
    "reduce_word",
]

__version__ = "0.1.0"
