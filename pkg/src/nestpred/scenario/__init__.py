from .frame import denormalize_scales, denormalize_xy, normalize_frame
from .io import ScenarioFormatError, load_scenarios, parse_record, save_scenarios
from .synthetic import KINDS, generate_synthetic
from .types import AgentTrack, FrameTransform, LanePolyline, Scenario, ScenarioError

__all__ = [
    "AgentTrack", "FrameTransform", "KINDS", "LanePolyline", "Scenario", "ScenarioError",
    "ScenarioFormatError", "denormalize_scales", "denormalize_xy", "generate_synthetic",
    "load_scenarios", "normalize_frame", "parse_record", "save_scenarios",
]
