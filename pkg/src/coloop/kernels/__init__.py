from .common import DataError, EngineConfig, PointSet
from .join import (JoinParams, JoinResult, brute_force_join, choose_dim_permutation, ego_less,
                   ego_sort, epsilon_self_join)
from .kmeans import KMeansConfigError, KMeansModel, kmeans, lloyd_reference
from .matmul import ShapeError, matmul, matmul_with_report, naive_matmul
