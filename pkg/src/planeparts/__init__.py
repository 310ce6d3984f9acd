"""Random plane partitions under the q^volume measure: exact sampling,
determinantal correlation kernels, bulk limits and the law of large numbers
for local patterns."""

__version__ = "0.1.0"

from .errors import (BranchCutError, ConvergenceError, DuplicatePointError, LimitExceededError,
                     OutsideRegionError, ParityError, PlanePartsError, PoleError,
                     PreconditionError, WindowError)
from .qspecial import (QParameter, action_S, dilog, li2, log_macmahon, macmahon_constant, phi,
                       qpochhammer)
from .bulkgeom import (BulkPoint, LatticePoint, Pattern, Rect, chi_bounds,
                       critical_quadratic_residual, density, enumerate_translates, in_region_A,
                       nearest_admissible, saddle_z)
from .kernels import (FiniteQKernel, QuadratureConfig, SineKernel, correlation, covariance,
                      gauge_check, kernel_Kq, kernel_sine, kernel_sine_equal_time)
from .sampler import (PlanePartition, PointConfiguration, RngStream, Window,
                      enumerate_plane_partitions, exact_pattern_probability,
                      plane_partition_counts, rsk_bijection, sample_geometric_matrix,
                      sample_plane_partition, sample_plane_partitions, to_point_configuration)
from .lln import (ExperimentReport, TestFunction, convergence_rate_check, covariance_decay_scan,
                  empirical_sigma, integral_I, run_lln_experiment)
