"""Benchmark harness for the effect of word-segmentation quality on QBE word spotting."""

from .core import (BoundingBox, Dataset, PageImage, Partition, WordSample, binarize, crop,
                   iou, partition_pages, query_set)
from .descriptors import (DescriptorConfig, FeatureVector, descriptor_distance,
                          hog_descriptor, lbp_descriptor, quadtree_descriptor,
                          quadtree_partition)
from .distortion import (DistortedDatabase, DistortionSpec, displacement_for_iou,
                         distort_box, generate_distorted_databases)
from .dtw import column_profiles, dtw_distance
from .metrics import (DistanceMatrix, MetricRecord, Ranking, average_precision,
                      mean_metrics, precision_at_k, r_precision, rank, relevance,
                      self_classification_accuracy)
from .analysis import (FusionWeights, SegQualityProfile, easy_hard_labels, fuse_distances,
                       label_correlation, segmentation_quality, spearman_footrule,
                       weight_search)
from .runner import Experiment, ExperimentConfig

__version__ = "0.1.0"
