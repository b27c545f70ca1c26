"""Conflict sets of disjoint sites: extraction and metric diagnostics.

The conflict set of a scene is the locus of points whose nearest-site
distance is attained by at least two sites.  This package extracts those
sets as curves (2D) or triangle meshes (3D), computes their traces on small
spheres, estimates tangent cones by rescaled slices, and runs inner-metric
diagnostics (geodesic scans, branch counting, link components).
"""

from .scene import (
    Ball,
    Box,
    ClippedScene,
    Hyperplane,
    Point,
    PointSet,
    Scene,
    SceneError,
    Segment,
    Site,
    Sphere,
    SupportPart,
    clip_scene,
    load_scene,
    make_scene,
    nearest_point,
    parse_scene,
    scene_dumps,
    scene_to_dict,
    site_pair_distance,
)
from .conflict import (
    ConflictComplex,
    Window,
    extract_conflict,
    label_points,
    refine_point,
)
from .spherical import (
    ConeApprox,
    SphericalComplex,
    SupportSet,
    annular_shadow,
    cone,
    geodesic_distance,
    icosphere,
    label_directions,
    min_distance_profile,
    spherical_conflict,
    support_sets,
)
from .tangent import (
    RescaledSlice,
    TangentReport,
    hausdorff,
    sphere_slice,
    tangent_cone_estimate,
    territory_direction_agreement,
    verify_tangent_cone,
)
from .metrics import (
    EmbeddingReport,
    GeodesicGraph,
    branch_tangents,
    build_geodesic_graph,
    dimension_check,
    embedding_scan,
    inner_distance,
    link_components,
    no_cusp_check,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "Box",
    "ClippedScene",
    "ConeApprox",
    "ConflictComplex",
    "EmbeddingReport",
    "GeodesicGraph",
    "Hyperplane",
    "Point",
    "PointSet",
    "RescaledSlice",
    "Scene",
    "SceneError",
    "Segment",
    "Site",
    "Sphere",
    "SphericalComplex",
    "SupportPart",
    "SupportSet",
    "TangentReport",
    "Window",
    "annular_shadow",
    "branch_tangents",
    "build_geodesic_graph",
    "clip_scene",
    "cone",
    "dimension_check",
    "embedding_scan",
    "extract_conflict",
    "geodesic_distance",
    "hausdorff",
    "icosphere",
    "inner_distance",
    "label_directions",
    "label_points",
    "link_components",
    "load_scene",
    "make_scene",
    "min_distance_profile",
    "nearest_point",
    "no_cusp_check",
    "parse_scene",
    "refine_point",
    "scene_dumps",
    "scene_to_dict",
    "site_pair_distance",
    "sphere_slice",
    "spherical_conflict",
    "support_sets",
    "tangent_cone_estimate",
    "territory_direction_agreement",
    "verify_tangent_cone",
    "__version__",
]
