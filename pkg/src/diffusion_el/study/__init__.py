"""Monte Carlo size and power studies."""

from diffusion_el.study.designs import STUDY_PRESETS, StudyDesign, get_design
from diffusion_el.study.harness import RepRecord, StudyResult, run_power_study, run_rep, run_size_study, run_study

__all__ = [
    "RepRecord",
    "STUDY_PRESETS",
    "StudyDesign",
    "StudyResult",
    "get_design",
    "run_power_study",
    "run_rep",
    "run_size_study",
    "run_study",
]
