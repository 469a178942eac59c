"""Inverse design of chemical graphs: descriptors, prediction models, MILP encodings and grid search."""

from .chemgraph import ChemicalGraph, parse_graph, format_graph, decompose, canonical_code
from .descriptors import DescriptorRegistry, build_registry, featurize
from .encode import TargetInterval, TopologySpec, encode_graph, encode_mlp, assemble_inference
from .gridsearch import ProjectionSet, grid_search, make_property_projections
from .milp import MilpModel, SolverConfig, solve
from .regression import LinearModel, MlpModel, TrainConfig, train_lasso, train_mlp, cross_validate

__version__ = "0.1.0"
