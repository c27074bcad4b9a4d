"""Square-plaque decompositions, supertile hierarchies, boundaries and Bratteli diagrams
for marked-square substitution tilings on finite windows."""
from .boundary import (BoundaryClass, BoundaryGraph, BoundaryReport, RootData, StratumLabel,
                       VirtualFeature, analyze, classify_boundary, detect_virtual_features,
                       extract_boundary_graph, find_roots, persistent_boundary, stratify)
from .bratteli import (BratteliDiagram, EdgeOrder, FrequencyMeasure, boundary_measure_bound,
                       build_diagram, check_standard_simple, tail_equivalent, tile_frequencies,
                       vershik_successor)
from .decomposition import (Arm, Cross, CrossSector, DecompositionError, Exit,
                            PartialDecomposition, SquarePlacement, crosses_and_exits,
                            decompose, decorate_cross, place_maximal_squares)
from .inflation import (InflationError, InflationHierarchy, IsoperimetricReport, Level,
                        LevelSchedule, Supertile, WindowExhausted, closed_form_bound,
                        inflate_level, isoperimetric_report, min_window_size, run_hierarchy)
from .io import RunConfig
from .kernels import BACKEND
from .tiling import (PrototileSet, SquareSubstitution, TilingWindow, expand_substitution,
                     load_substitution, occurrences, sample_window)
from .verify import VerificationReport, verify_artifacts

__all__ = [
    "Arm", "BACKEND", "BoundaryClass", "BoundaryGraph", "BoundaryReport", "BratteliDiagram",
    "Cross", "CrossSector", "DecompositionError", "EdgeOrder", "Exit", "FrequencyMeasure",
    "InflationError", "InflationHierarchy", "IsoperimetricReport", "Level", "LevelSchedule",
    "PartialDecomposition", "PrototileSet", "RootData", "RunConfig", "SquarePlacement",
    "SquareSubstitution", "StratumLabel", "Supertile", "TilingWindow", "VerificationReport",
    "VirtualFeature", "WindowExhausted", "analyze", "boundary_measure_bound", "build_diagram",
    "check_standard_simple", "classify_boundary", "closed_form_bound", "crosses_and_exits",
    "decompose", "decorate_cross", "detect_virtual_features", "expand_substitution",
    "extract_boundary_graph", "find_roots", "inflate_level", "isoperimetric_report",
    "load_substitution", "min_window_size", "occurrences", "persistent_boundary",
    "place_maximal_squares", "run_hierarchy", "sample_window", "stratify", "tail_equivalent",
    "tile_frequencies", "vershik_successor", "verify_artifacts",
]
