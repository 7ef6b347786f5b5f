import pytest

from diffusion_el.utils.errors import (
    ConfigError,
    DataFormatError,
    DiffusionElError,
    ParameterDomainError,
)


def test_data_format_error_names_the_line():
    error = DataFormatError("not a finite number: 'abc'", line=3)
    assert str(error) == "line 3: not a finite number: 'abc'"
    assert error.line == 3
    assert error.error_message == str(error)


def test_data_format_error_without_line():
    error = DataFormatError("empty file")
    assert str(error) == "empty file"
    assert error.line is None


@pytest.mark.parametrize("error_class", [ParameterDomainError, ConfigError, DataFormatError])
def test_validation_errors_are_value_errors(error_class):
    with pytest.raises(ValueError):
        raise error_class("invalid")
    assert issubclass(error_class, DiffusionElError)
