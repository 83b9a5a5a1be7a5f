"""lanepost: turn noisy per-lane probability maps into tracked active lanes.

The pipeline extracts confidence-weighted points per channel, classifies
each marking straight or curved, fits lines by confidence-weighted least
squares (splines for curves), tracks markings across frames with
exponentially decaying evidence weights, and reports the active pair.
An IoU evaluation harness and a synthetic-scenario generator make every
stage verifiable at desk scale.
"""

from .backend import available_backends, get_backend
from .evaluation import (
    EvalConfig,
    EvalReport,
    baseline_decode,
    evaluate,
    lane_iou,
    mask_iou,
    rasterize_polyline,
)
from .extraction import ExtractionConfig, LanePoint, adaptive_threshold, extract_lane_points
from .lane_model import (
    Classification,
    LaneMarking,
    classify,
    corroborate_curve,
    r_squared,
)
from .pipeline import (
    FrameResult,
    PipelineConfig,
    RunSummary,
    bench,
    process_frame,
    process_frame_baseline,
    run_dataset,
)
from .probmap_io import (
    DataFormatError,
    GroundTruthFormat,
    GroundTruthFrame,
    LaneRecord,
    ProbMapFormat,
    ProbMapFrame,
    load_ground_truth,
    load_manifest,
    load_probmap,
    read_lane_output,
    write_lane_output,
    write_probmap,
)
from .regression import (
    FitDegenerateError,
    QuadSpline,
    StraightLine,
    VerticalLaneError,
    WlsFit,
    build_spline,
    fit_straight,
    remove_outliers,
    wls_fit,
)
from .synth import (
    CurvedLaneSpec,
    ScenarioSpec,
    StraightLaneSpec,
    clean_preset,
    degraded_preset,
    render_scenario,
    seeded_rng,
    write_scenario,
)
from .tracker import (
    Observation,
    Side,
    TrackedLane,
    Tracker,
    TrackerConfig,
    match_lanes,
    select_active,
    update_weights,
    zeta,
)

__version__ = "0.1.0"
