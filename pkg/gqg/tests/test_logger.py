import json

import numpy as np
import structlog

from gqg import __version__
from gqg.utils import run_context
from gqg.utils.logger import _code_version, _numpy_scalars


class TestProcessors:
    """Test cases for the project log processors"""

    def test_numpy_scalars(self):
        """Test that numpy scalars become JSON-serialisable Python numbers"""
        event = _numpy_scalars(None, "info", {"event": "step", "steps": np.int64(3), "dt": np.float32(0.5)})

        assert type(event["steps"]) is int
        assert type(event["dt"]) is float
        assert json.loads(json.dumps(event)) == {"event": "step", "steps": 3, "dt": 0.5}

    def test_code_version(self):
        """Test that the code version is stamped without overriding an explicit one"""
        assert _code_version(None, "info", {"event": "x"})["code_version"] == __version__
        assert _code_version(None, "info", {"event": "x", "code_version": "old"})["code_version"] == "old"


class TestRunContext:
    """Test cases for run identity binding"""

    def test_bound_inside_only(self):
        """Test that run keys are merged inside the context and gone after it"""
        with run_context(run_id="abc123", experiment="decay", config_hash="f00"):
            inside = structlog.contextvars.merge_contextvars(None, "info", {"event": "x"})
        outside = structlog.contextvars.merge_contextvars(None, "info", {"event": "x"})

        assert inside["run_id"] == "abc123"
        assert inside["experiment"] == "decay"
        assert inside["config_hash"] == "f00"
        assert "run_id" not in outside
