"""Incremental graph-pattern rule engine and a Petri net to statechart
transformation built on it."""

from .bench import BenchRecord, generate_sp, run_bench
from .engine import FiringLimitExceeded, FiringLog, Phase, Rule, agenda_snapshot, run_phase, step
from .formats import load_models, parse_net, serialize_outputs
from .graph import GraphStore, UnknownNode
from .models import model_size, validate_statechart, validate_trace
from .patterns import MatchSet, PatternBuilder, UnknownPattern, eval_reference, well_formed
from .propagation import open_session, parse_change_script, propagate, snapshot
from .rete import IncrementalMatcher, Network, ReferenceMatcher, compile_patterns, make_matcher
from .transform import pn2sc_library, transform

__version__ = "0.1.0"

__all__ = [
    "BenchRecord", "FiringLimitExceeded", "FiringLog", "GraphStore", "IncrementalMatcher",
    "MatchSet", "Network", "PatternBuilder", "Phase", "ReferenceMatcher", "Rule",
    "UnknownNode", "UnknownPattern", "agenda_snapshot", "compile_patterns", "eval_reference",
    "generate_sp", "load_models", "make_matcher", "model_size", "open_session",
    "parse_change_script", "parse_net", "pn2sc_library", "propagate", "run_bench",
    "run_phase", "serialize_outputs", "snapshot", "step", "transform",
    "validate_statechart", "validate_trace", "well_formed",
]
