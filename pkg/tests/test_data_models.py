"""Unit tests for the pydantic report and configuration models."""

import pytest
from pydantic import ValidationError

from harnack_verify.schemas.data_models import (
    ClaimReport,
    IdentityVerdict,
    RunConfig,
    ScriptReport,
    StepReport,
)


class TestRunConfig:
    """Test RunConfig defaults and validation."""

    def test_defaults(self):
        """Test the default seed, trials and tolerances."""
        run = RunConfig()

        assert run.seed == 0
        assert run.trials == 100
        assert run.tolerance == 1e-10
        assert run.dimensions == [3, 4, 5]
        assert run.fd_step == 1e-4
        assert run.fd_tolerance == 1e-6

    @pytest.mark.parametrize(
        "field, value",
        [
            ("trials", 0),
            ("tolerance", -1e-3),
            ("fd_tolerance", -1.0),
            ("fd_step", 0.0),
            ("dimensions", []),
            ("dimensions", [3, 1]),
        ],
    )
    def test_invalid_values(self, field, value):
        """Test that out-of-range parameters are rejected."""
        with pytest.raises(ValidationError):
            RunConfig(**{field: value})


class TestScriptReport:
    """Test ScriptReport aggregation and its text summary."""

    @pytest.fixture
    def sample_report(self):
        """Create a report with one passing and one failing step."""
        return ScriptReport(
            script="demo.drv",
            passed=False,
            steps=[
                StepReport(step_id="first", passed=True, claims=[ClaimReport(lhs="W[a]", rhs="W[a]", passed=True)]),
                StepReport(
                    step_id="second",
                    passed=False,
                    claims=[
                        ClaimReport(
                            lhs="2*W[a]",
                            rhs="W[a]",
                            residual_terms=1,
                            residual=["W[a]"],
                            first_mismatch="W[a]",
                        )
                    ],
                ),
            ],
        )

    def test_residual_terms(self, sample_report):
        """Test that a step sums the residuals of its claims."""
        assert sample_report.steps[0].residual_terms == 0
        assert sample_report.steps[1].residual_terms == 1

    def test_summary(self, sample_report):
        """Test the PASS/FAIL lines and the first mismatch."""
        lines = sample_report.summary().splitlines()

        assert lines[0] == "PASS first"
        assert lines[1] == "FAIL second (1 residual term(s))"
        assert lines[2].strip() == "first mismatch: W[a]"
        assert lines[-1] == "1/2 step(s) passed"

    def test_serialization(self, sample_report):
        """Test that a report survives a JSON dump."""
        restored = ScriptReport.model_validate_json(sample_report.model_dump_json())

        assert restored == sample_report

    def test_empty_report_passes(self):
        """Test that a script without steps passes."""
        report = ScriptReport(script="empty.drv")

        assert report.passed
        assert report.summary() == "0/0 step(s) passed"


class TestIdentityVerdict:
    """Test the randomized-equality verdict model."""

    def test_required_fields(self):
        """Test that every verdict field is required."""
        with pytest.raises(ValidationError):
            IdentityVerdict(passed=True, trials=3)
