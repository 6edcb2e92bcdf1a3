"""Exception types shared across the package."""


class SupportPoseError(ValueError):
    """Base class for all package-specific errors."""


class ModelSpecError(SupportPoseError):
    """Malformed or inconsistent kinematic model document."""


class MeshError(SupportPoseError):
    """Invalid triangle mesh data or OBJ document."""


class MarkerDataError(SupportPoseError):
    """Malformed marker trajectory data."""


class FitError(SupportPoseError):
    """Pose or object fitting could not be performed."""


class DetectionError(SupportPoseError):
    """Contact detection input inconsistency."""


class BundleError(SupportPoseError):
    """Motion bundle manifest problems (missing files, frame mismatch)."""
