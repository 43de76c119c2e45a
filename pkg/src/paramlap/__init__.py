"""Parameterized normalized Laplacians, their spectra, and graph networks built on them."""
from .errors import DataError, NumericalError, ParamLapError, ParameterError, UsageError
from .graph import Graph, LaplacianOperator, read_edge_list, write_edge_list
from .homophily import HomophilyReport, metrics
from .laplacian import LaplacianParams, param_adjacency, param_adjacency_matrix, param_laplacian
from .rewire import RewireReport, rewire
from .spectral import (EigvecView, SpectralDecomposition, diffusion_distance, eig_sym,
                       eigvec_view, spectral_distance, spectral_view)
from .synthgen import Dataset, SynthConfig, generate

__version__ = "0.1.0"
