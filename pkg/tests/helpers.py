"""Shared helpers for comparing reports."""

import math


def assert_reports_close(a, b, tol=1e-9, skip=("stream", "config"), path=""):
    """Recursive equality; floats within ``tol``; keys in ``skip`` ignored."""
    if isinstance(a, dict):
        assert isinstance(b, dict), path
        keys = set(a) - set(skip)
        assert keys == set(b) - set(skip), (path, keys ^ (set(b) - set(skip)))
        for k in keys:
            assert_reports_close(a[k], b[k], tol, skip, f"{path}/{k}")
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b), path
        for i, (x, y) in enumerate(zip(a, b)):
            assert_reports_close(x, y, tol, skip, f"{path}[{i}]")
    elif isinstance(a, float) and isinstance(b, float):
        assert math.isclose(a, b, rel_tol=0, abs_tol=tol), (path, a, b)
    else:
        assert a == b, (path, a, b)
