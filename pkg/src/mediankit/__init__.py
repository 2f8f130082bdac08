"""Median graphs, their automorphism groups, cores and Min-sets."""

__version__ = "0.1.0"

from .errors import (ClosureBudgetExceeded, InstanceTooLarge, InversionPresent, KindMismatch, MedianKitError,
                     NotMedian, OracleBudgetExceeded, ParseError, PreconditionFailed, SchemaError,
                     UndecidedAtBound, UnknownRequest, WindowBudgetExceeded)
from .pocset import Pocset, enumerate_ultrafilters, realize_median_graph, verify_pocset
from .median_core import (MedianGraph, convex_hull, decompose_product, gate, rank, restriction_quotient,
                          verify_median_graph, walls)
from .instances import ProductInstance, automorphism, line_map, tree_map, finite_map
from .actions import (GroupAction, classify_halfspace, core_window, essential_core, fixed_point_or_cube,
                      has_inversions, is_essential)
from .minsets import (WallWeighting, endpoints, is_non_transverse, is_semisimple, min_window,
                      reduced_core_gate, translation_length)

__all__ = [name for name in dir() if not name.startswith("_")]
