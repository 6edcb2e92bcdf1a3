"""Support-pose detection and transition analytics for marker-based motion
capture: pose reconstruction, multi-contact detection against environment
geometry, segmentation into support-pose transitions, and the corpus-level
statistics (transition table, duration histograms with two-normal mixture
fits, transition graph, segmentation-error reports)."""

from .analytics import (Histogram, MixtureFit, TransitionGraph, TransitionStats,
                        build_transition_graph, duration_histogram,
                        fit_two_normal_mixture, transition_table)
from .contacts import (ContactTimeline, DetectionThresholds,
                       classify_environmental, detect_contacts, segment_speed)
from .errors import (BundleError, DetectionError, FitError, MarkerDataError,
                     MeshError, ModelSpecError, SupportPoseError)
from .fit import (FitOptions, FitResult, MarkerFrame, MarkerSequence,
                  ObjectModel, ObjectTrack, PoseTrajectory, fit_frame,
                  fit_object_track, fit_sequence, objective)
from .geometry import (ProximityResult, TriangleMesh, box_mesh, floor_mesh,
                       load_obj, make_transform, mesh_mesh_distance, parse_obj,
                       point_triangle_distance)
from .io import (MotionBundle, parse_marker_csv, parse_motion_bundle,
                 write_motion_bundle)
from .model import (Joint, KinematicModel, MarkerAttachment, PoseVector,
                    Segment, SUPPORT_SEGMENT_CLASS, emit_model_spec,
                    forward_kinematics, load_model, virtual_marker_positions)
from .pipeline import PipelineConfig, run_pipeline
from .segmentation import (EvalReport, SupportPose, TransitionRecord,
                           TransitionSequence, compare_to_annotation,
                           contact_change_count, segment_timeline,
                           support_pose_at)

__version__ = "0.1.0"
