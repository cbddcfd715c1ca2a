"""Spectral analysis of quantum graphs: compact spectra, decorations, Floquet theory, Schnol bounds."""
from .errors import (CertificateNotFound, GraphError, PoleError, QGraphError,
                     ResonanceError, SolverError)
from .graph import (DIRICHLET, NEUMANN, DeltaType, Dirichlet, Edge, MetricGraph,
                    PeriodicStructure, SpectralRobin, VertexConditionSet,
                    build_graph, decorate, dumps, load, loads, metric_ball,
                    subdivide_all, subdivide_edge, supercell, to_dict, unfold)
from .edge import (EdgeWave, basis_eval, dirichlet_spectrum, edge_dtn_block,
                   edge_transfer)
from .spectrum import (EigenResult, assemble_secular, dirichlet_resonant_states,
                       eigenfunction_reconstruct, eigenvalues, solve_spectrum,
                       vertex_residual)
from .dtn import (DtnFunction, PoleData, decorated_reduction, dtn_function,
                  dtn_pole_candidates, dtn_residue, gap_certificate)
from .bands import BandStructure
from .floquet import (Scar, band_structure, bloch_secular, flat_band_test,
                      quantum_scar, vertex_reduction_operator)
from .discrete import (LaurentMatrix, PeriodicDifferenceOperator, PolyKernelVector,
                       compact_kernel_solution, discrete_band_structure,
                       discrete_flat_band_test, find_compact_kernel,
                       floquet_symbol, inverse_floquet)
from .schnol import (CutoffFunction, GeneralizedEigenfunction, GrowthProfile,
                     build_cutoff, generate_generalized_eigenfunction,
                     growth_profile, schnol_distance_bound)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
