"""Exponential-family random graph models: simulation, exact computation and estimation."""

from .errors import (AllMissing, CapExceeded, ErgmError, ESSDegenerate, MLENonexistent, NonIgnorableDesign,
                     ParseError, PseudoSeparation, SingularInformation)
from .estimate import (FitResult, GainSchedule, NetworkData, fit_exact, fit_pooled, mcmle, mple,
                       standard_errors, stochastic_approximation)
from .exact import (enumerate_stats, exact_fit, exact_incomplete_loglik, exact_loglik, exact_mle,
                    exact_moments, log_normalizer)
from .gof import GofReport, ScanReport, degeneracy_scan, gof_compare, gof_summary
from .graph import BlockStructure, Graph, NodeAttributes, build_graph, split_blocks
from .missing import (DesignParams, ObservationMask, ego_sample, incomplete_fit, incomplete_loglik,
                      link_trace, mar_mask, subgraph_sample)
from .model import (PRESETS, GwespDecl, ModelSpec, ModelTemplate, OffsetDecl, TermDecl,
                    brain13_template, edges_template, gwesp_template, sparse_bernoulli_template,
                    template, triangle_template)
from .sampler import Chain, McmcConfig, conditional_sample, mh_sample, set_threads

__version__ = "0.1.0"
