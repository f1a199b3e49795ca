"""Cache-oblivious parallel loops over space-filling-curve orders."""

__version__ = "0.1.0"

from .curves import (CurveKind, CurveOrder, GridDomain, HilbertCursor, band, composite_order,
                     domain_cells, enumerate_cells, hilbert_coord, hilbert_index, hilbert_next,
                     make_order, upper_triangle, z_decode, z_encode)
from .loops import (AccessDescriptor, AffineMap, BudgetError, DependenceReport, LoopNest,
                    dependence_check, monotony_infer, validate_instrumented)
from .scheduler import (CacheModel, ExecutionReport, Packet, ScheduleError, SchedulePlan,
                        execute, locality_score, partition, transfer_cost)
