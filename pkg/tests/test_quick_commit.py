#!/usr/bin/env python3
"""
Quick commit tests for flatmoduli.

These tests run quickly and verify core functionality works.
Used for rapid feedback during development and CI/CD.
"""

import pytest
import numpy as np
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import ConfigLoader
from derham import curvature, trivial_twist
from lie import build_group
from moduli import admissible_set
from torus import constant_form, differential, make_torus


@pytest.mark.quick
@pytest.mark.smoke
class TestQuickSmoke:
    """Smoke tests that verify basic functionality quickly."""

    def test_imports_work(self):
        """Test that all main modules import without errors."""
        import flatmoduli  # noqa: F401
        import holonomy  # noqa: F401
        import certificates  # noqa: F401

    def test_config_loader_basic(self):
        """Test basic config loading functionality."""
        config = ConfigLoader()._get_default_config()
        assert config['seed'] == 0
        assert config['tolerances']['accept'] < config['tolerances']['reject']

    def test_torus_and_group(self):
        geom = make_torus(1, [1, 1j], 2)
        spec = build_group("Triangular", 2)
        assert geom.grid == 7
        assert spec.ambient_dim == 2

    def test_constant_forms_are_closed(self):
        geom = make_torus(1, [1, 1j], 2)
        spec = build_group("Triangular", 2)
        alpha = constant_form(geom, spec, 1, {(0,): np.diag([1.0, 2.0])})
        assert differential(alpha).norm() == 0
        assert curvature(alpha).flat

    def test_triangular2_admissible_set(self):
        geom = make_torus(1, [1, 1j], 2)
        spec = build_group("Triangular", 2)
        desc = admissible_set(spec, trivial_twist(geom, spec))
        assert desc.dimension == 4
        assert len(desc.equations) == 1
