import pytest

from diffusion_el.models.zoo import MODEL_PRESETS, Family
from diffusion_el.statistic.bandwidth import BANDWIDTH_PRESETS, BandwidthScheme
from diffusion_el.statistic.el_statistic import Mode, Variant
from diffusion_el.statistic.region import REGION_PRESETS
from diffusion_el.study.designs import STUDY_PRESETS, StudyDesign, get_design
from diffusion_el.utils.errors import ParameterDomainError


class TestGetDesign:

    def test_desk_scale(self):
        design = get_design("vasicek-table1")
        assert design.truth_family == design.null_family == Family.VASICEK
        assert design.is_size_study
        assert design.B == 99
        assert design.n_reps == 200
        assert design.region == REGION_PRESETS["vasicek0"]
        assert design.rule.scheme == BandwidthScheme.FIXED
        assert design.rule.values == (0.016, 0.017, 0.019, 0.020, 0.022, 0.024)

    def test_full_scale(self):
        design = get_design("cir-table3", n=250, full_scale=True)
        assert design.B == 250
        assert design.n_reps == 500
        assert design.theta["kappa"] == pytest.approx(0.89218)

    def test_power_design(self):
        design = get_design("power-table4a")
        assert design.truth_family == Family.CIR
        assert design.null_family == Family.VASICEK
        assert not design.is_size_study
        assert design.n_reps == 100
        assert len(design.rule.values) == 5

    def test_data_driven(self):
        design = get_design("vasicek-table1", n=1000, data_driven=True)
        assert design.rule.data_driven
        assert design.rule.J == 6
        assert design.rule.a == 0.95

    def test_overrides(self):
        design = get_design("vasicek-table1", n_reps=20, seed=5, variant="el", mode="data")
        assert design.n_reps == 20
        assert design.seed == 5
        assert design.variant == Variant.EL
        assert design.mode == Mode.DATA

    @pytest.mark.parametrize(
        "name, model",
        [
            ("vasicek-2-table1", "vasicek-2"),
            ("vasicek2-table1", "vasicek2"),
            ("cir1-table3", "cir1"),
            ("cir2-table3", "cir2"),
        ],
    )
    def test_every_model_design(self, name, model):
        design = get_design(name)
        assert design.is_size_study
        assert design.theta_truth == MODEL_PRESETS[model][1]
        assert design.region == REGION_PRESETS[model]
        assert design.rule.values == tuple(BANDWIDTH_PRESETS[model][125])
        assert get_design(name, n=500).rule.values == tuple(BANDWIDTH_PRESETS[model][500])

    def test_model_override(self):
        design = get_design("vasicek-table1", model="vasicek2", n=250)
        assert design == get_design("vasicek2-table1", n=250).scaled(name="vasicek-table1")
        assert get_design("cir-table3", model="cir0") == get_design("cir-table3")

    def test_model_override_of_a_power_study(self):
        design = get_design("power-table4a", model="cir2")
        assert design.truth_family == Family.CIR
        assert design.null_family == Family.VASICEK
        assert design.theta_truth == MODEL_PRESETS["cir2"][1]
        assert design.region == REGION_PRESETS["cir2"]
        assert design.n_reps == 100

    def test_model_override_outside_the_null_family(self):
        with pytest.raises(ValueError, match="size study"):
            get_design("vasicek-table1", model="cir1")
        with pytest.raises(ValueError, match="Unknown model preset"):
            get_design("vasicek-table1", model="vasicek9")

    def test_unknown(self):
        with pytest.raises(ValueError, match="Unknown study preset"):
            get_design("vasicek-table9")
        with pytest.raises(ValueError):
            get_design("vasicek-table1", n=1000)


class TestStudyDesign:

    @pytest.mark.parametrize("changes", [{"n_reps": 9}, {"n": 1}, {"alpha": 0.0}])
    def test_invalid(self, changes):
        with pytest.raises(ValueError):
            get_design("vasicek-table1", **changes)

    def test_invalid_truth(self):
        with pytest.raises(ParameterDomainError):
            get_design("vasicek-table1", theta_truth={"kappa": -1.0, "alpha": 0.09, "sigma2": 0.002})

    def test_models(self):
        design = get_design("power-table4a", euler_substeps=7)
        assert design.truth_model.family == Family.CIR
        assert design.null_model.family == Family.VASICEK
        assert design.null_model.euler_substeps == 7

    def test_scaled(self):
        design = get_design("vasicek-table1")
        smaller = design.scaled(n_reps=10, B=99)
        assert isinstance(smaller, StudyDesign)
        assert smaller.n_reps == 10
        assert design.n_reps == 200

    def test_to_dict(self):
        content = get_design("vasicek-table1").to_dict()
        assert content["name"] == "vasicek-table1"
        assert content["truth_family"] == "vasicek"
        assert content["bandwidth_scheme"] == "fixed"
        assert content["bandwidths"] == [0.016, 0.017, 0.019, 0.020, 0.022, 0.024]
        assert content["grid"] == [40, 40]
        assert get_design("vasicek-table1", data_driven=True).to_dict()["bandwidths"] is None

    @pytest.mark.parametrize("name", list(STUDY_PRESETS))
    def test_presets_build(self, name):
        assert get_design(name).name == name
