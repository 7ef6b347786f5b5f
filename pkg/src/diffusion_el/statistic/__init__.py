"""Integration regions, EL statistics, bandwidth sets and the bootstrap calibration."""

from diffusion_el.statistic.asymptotic import AsymptoticRef, asymptotic_ref, beta_plugin, sigma_matrix
from diffusion_el.statistic.bandwidth import (
    BANDWIDTH_PRESETS,
    BandwidthRule,
    BandwidthScheme,
    BandwidthSet,
    build_set,
    cv_criterion,
    cv_select,
    preset_bandwidths,
    scott_rule,
)
from diffusion_el.statistic.bootstrap import BootstrapResult, bootstrap_test, critical_value, p_value
from diffusion_el.statistic.el_statistic import (
    BandwidthStatistic,
    LocalELResult,
    Mode,
    TestStatistics,
    Variant,
    compute_statistics,
    el_ratio,
    el_ratio_from_deviations,
    l_n,
    lsel_from_deviations,
    lsel_ratio,
    lsel_ratio_exact,
    n_of_h_data,
    n_of_h_grid,
    studentized_ratio,
)
from diffusion_el.statistic.region import REGION_PRESETS, Region, get_region

__all__ = [
    "AsymptoticRef",
    "BANDWIDTH_PRESETS",
    "BandwidthRule",
    "BandwidthScheme",
    "BandwidthSet",
    "BandwidthStatistic",
    "BootstrapResult",
    "LocalELResult",
    "Mode",
    "REGION_PRESETS",
    "Region",
    "TestStatistics",
    "Variant",
    "asymptotic_ref",
    "beta_plugin",
    "bootstrap_test",
    "build_set",
    "compute_statistics",
    "critical_value",
    "cv_criterion",
    "cv_select",
    "el_ratio",
    "el_ratio_from_deviations",
    "get_region",
    "l_n",
    "lsel_from_deviations",
    "lsel_ratio",
    "lsel_ratio_exact",
    "n_of_h_data",
    "n_of_h_grid",
    "p_value",
    "preset_bandwidths",
    "scott_rule",
    "sigma_matrix",
    "studentized_ratio",
]
