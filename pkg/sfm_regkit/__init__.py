r"""SFM-REGKIT utility module.

Tools around structure-from-motion submissions: scoring camera poses with
the mean Average Accuracy (mAA) metric, ordering views of a sequence,
selecting image pairs to match and merging reconstructions.

This utility module has 5 parts:

1- Scoring
    Register predicted camera centers onto the ground truth with the best
    similarity transform found over all camera triplets and average the
    registered fraction over a threshold schedule.

2- Ordering
    Build pairwise image distances (pixel difference, SSIM, block-matching
    flow spread or inverse match counts) and recover the capture order by
    solving a traveling-salesman tour or by chaining best-matching pairs.

3- Pair selection
    Propose image pairs from global descriptors by similarity threshold,
    minimum spanning tree, or exhaustively.

4- Alignment
    Register one reconstruction onto another and merge their cameras.

5- Formats
    Read and write submission CSV files, match tables, descriptor files,
    distance matrices and binary PGM images.

Scoring a reconstruction::

    >>> gt = synthesize_scene(5)
    >>> maa(gt, gt, [0.01, 0.05, 0.1]).maa
    1.0

    >>> t = SimilarityTransform(2.0, np.eye(3), [1, 0, 0])
    >>> pred = gt.with_images(
    ...     image.with_pose(transform_pose(t, image.pose))
    ...     for image in gt.images)
    >>> maa(pred, gt, [0.01]).maa
    1.0

Ordering views::

    >>> table = MatchTable({('a', 'b'): 90, ('b', 'c'): 80, ('a', 'c'): 10})
    >>> chain_order(table).order
    (0, 1, 2)

    >>> tsp_exact(match_matrix(table)).order
    (0, 1, 2)

Selecting pairs::

    >>> d = DescriptorSet(('x', 'y', 'z'), [[1, 0], [0, 1], [1, 1]])
    >>> mst(build_similarity_graph(d)).edges
    ((0, 2, 0.7071067811865475), (1, 2, 0.7071067811865475))

Writing a submission::

    >>> print(write_submission(scene_to_rows(gt))[:59])
    image_path,dataset,scene,rotation_matrix,translation_vector

"""

from .err import (SfmRegkitError, FormatError, InputError, GeometryError,
                  SolverError, UsageError, InvalidRotation,
                  DegenerateConfiguration, TooFewCameras, NoFeasibleTriplet,
                  EmptyImage, ImageTooSmall, TooFewImages, ZeroVector,
                  TooLarge, Infeasible, InvalidRow, BadHeader, BadFieldCount,
                  BadNumber, BadRotation, DuplicatePair, SelfPair,
                  DimMismatch, NonFinite, BadMagic, BadDimensions,
                  TruncatedData)
from .config import (DEFAULT_THRESHOLDS, ThresholdSchedule, RunConfig,
                     load_threshold_schedule, get_thread_count)
from .geometry import (Pose, SceneImage, Scene, validate_rotation,
                       rotation_error, camera_center, pose_from_center,
                       normalize_centers, synthesize_scene)
from .horn import (IDENTITY, SimilarityTransform, Correspondences, apply,
                   fit_similarity, fit_similarity_batch, residuals,
                   transform_pose)
from .scoring import (RegistrationResult, MaaReport, SceneScore,
                      best_registration, maa, register_reconstructions,
                      apply_registration, merge_reconstructions,
                      score_scenes)
from .matches import MatchTable
from .metrics import (GrayImage, FlowField, DistanceMatrix, resample,
                      pixel_diff_weight, ssim, ssim_weight, block_flow,
                      flow_std_weight, match_count_weight,
                      build_distance_matrix, classify_transparency,
                      shared_dimensions)
from .ordering import (Tour, tour_cost, tsp_exact, tsp_heuristic,
                       chain_order)
from .pairs import (DescriptorSet, SimilarityGraph, SpanningForest,
                    cosine_similarity, build_similarity_graph,
                    propose_pairs, mst, exhaustive_pairs, match_matrix)
from .formats import (SubmissionRow, write_submission, read_submission,
                      rows_to_scenes, scene_to_rows, write_match_table,
                      read_match_table, write_descriptors, read_descriptors,
                      write_pgm, read_pgm, write_distance_matrix,
                      read_distance_matrix)
from .dump import dump_scores_text, dump_scores_json

from ._version import get_versions

__version__ = get_versions()['version']
del get_versions

__all__ = [
    # errors
    "SfmRegkitError",
    "FormatError",
    "InputError",
    "GeometryError",
    "SolverError",
    "UsageError",
    "InvalidRotation",
    "DegenerateConfiguration",
    "TooFewCameras",
    "NoFeasibleTriplet",
    "EmptyImage",
    "ImageTooSmall",
    "TooFewImages",
    "ZeroVector",
    "TooLarge",
    "Infeasible",
    "InvalidRow",
    "BadHeader",
    "BadFieldCount",
    "BadNumber",
    "BadRotation",
    "DuplicatePair",
    "SelfPair",
    "DimMismatch",
    "NonFinite",
    "BadMagic",
    "BadDimensions",
    "TruncatedData",
    # configuration
    "DEFAULT_THRESHOLDS",
    "ThresholdSchedule",
    "RunConfig",
    "load_threshold_schedule",
    "get_thread_count",
    # geometry
    "Pose",
    "SceneImage",
    "Scene",
    "validate_rotation",
    "rotation_error",
    "camera_center",
    "pose_from_center",
    "normalize_centers",
    "synthesize_scene",
    # alignment
    "IDENTITY",
    "SimilarityTransform",
    "Correspondences",
    "apply",
    "fit_similarity",
    "fit_similarity_batch",
    "residuals",
    "transform_pose",
    # scoring
    "RegistrationResult",
    "MaaReport",
    "SceneScore",
    "best_registration",
    "maa",
    "register_reconstructions",
    "apply_registration",
    "merge_reconstructions",
    "score_scenes",
    # metrics
    "MatchTable",
    "GrayImage",
    "FlowField",
    "DistanceMatrix",
    "resample",
    "pixel_diff_weight",
    "ssim",
    "ssim_weight",
    "block_flow",
    "flow_std_weight",
    "match_count_weight",
    "build_distance_matrix",
    "classify_transparency",
    "shared_dimensions",
    # ordering
    "Tour",
    "tour_cost",
    "tsp_exact",
    "tsp_heuristic",
    "chain_order",
    # pairs
    "DescriptorSet",
    "SimilarityGraph",
    "SpanningForest",
    "cosine_similarity",
    "build_similarity_graph",
    "propose_pairs",
    "mst",
    "exhaustive_pairs",
    "match_matrix",
    # formats
    "SubmissionRow",
    "write_submission",
    "read_submission",
    "rows_to_scenes",
    "scene_to_rows",
    "write_match_table",
    "read_match_table",
    "write_descriptors",
    "read_descriptors",
    "write_pgm",
    "read_pgm",
    "write_distance_matrix",
    "read_distance_matrix",
    "dump_scores_text",
    "dump_scores_json",
]
