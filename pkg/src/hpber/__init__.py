"""Nonparametric Bayes error estimation from minimal spanning trees and the
SmartSVM hierarchical multiclass classifier."""

from .ber import (BerEstimate, estimate_from_r, hp_divergence, ovr_ber_estimates,
                  pairwise_ber, pairwise_ber_matrix)
from .dataset import LabeledDataset, kfold, load_csv, stratified_split
from .metrics import adjusted_rand_index, confusion_rate
from .mst import cross_count, mst, orthogonal_msts, pairwise_distances
from .smartsvm import SmartSvmModel, predict, train
from .tree import build_class_graph, build_hierarchy, min_cut

__version__ = "0.1.0"
