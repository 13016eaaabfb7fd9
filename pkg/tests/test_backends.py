"""Compiled and pure-Python tree kernels must realize identical trees.

Both consume raw uniforms from the same bit generator through one fixed
recipe, so from equal seeds they must produce bit-identical statistics, not
merely equal in law.
"""

from __future__ import annotations

import subprocess
import sys

import numpy as np
import pytest

from splitlab import _backend, _pycore
from splitlab._rng import bit_generator
from splitlab.splitters import kernel_code
from splitlab.trees import default_params

try:
    from splitlab import _core
except ImportError:  # pragma: no cover
    _core = None

requires_compiled = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def test_compiled_backend_is_active_here():
    # this repository ships the extension; the default selection must use it
    assert _core is not None
    assert _backend.backend_name() == "compiled"
    assert _backend.pure_kernel() is _pycore


@requires_compiled
@pytest.mark.parametrize("family", ["bst", "med3", "bary3", "dir3", "bb"])
@pytest.mark.parametrize("n", [0, 1, 7, 50, 300, 2000])
def test_kernels_realize_identical_trees(family, n, family_specs, family_params):
    spec, params = family_specs[family], family_params[family]
    fid, fparams = kernel_code(spec)
    k_c = _core.TreeKernel(params.b, params.s, params.s0, params.s1, fid, fparams)
    k_p = _pycore.TreeKernel(params.b, params.s, params.s0, params.s1, fid, fparams)
    for rep in range(3):
        got_c = k_c.stats(bit_generator(11, "test", 1000 * rep + n), n)
        got_p = k_p.stats(bit_generator(11, "test", 1000 * rep + n), n)
        assert got_c[0] == got_p[0], (family, n, "path")
        assert got_c[1] == got_p[1], (family, n, "wiener")
        if got_c[2] is None:
            assert got_p[2] is None
        else:
            np.testing.assert_array_equal(np.asarray(got_c[2]), np.asarray(got_p[2]))


@requires_compiled
@pytest.mark.parametrize("family", ["bst", "dir3"])
def test_kernels_build_identical_arenas(family, family_specs, family_params):
    spec, params = family_specs[family], family_params[family]
    fid, fparams = kernel_code(spec)
    k_c = _core.TreeKernel(params.b, params.s, params.s0, params.s1, fid, fparams)
    k_p = _pycore.TreeKernel(params.b, params.s, params.s0, params.s1, fid, fparams)
    a_c = k_c.build(bit_generator(13, "test", 0), 400)
    a_p = k_p.build(bit_generator(13, "test", 0), 400)
    assert a_c["n"] == a_p["n"] and a_c["n_nodes"] == a_p["n_nodes"]
    m = a_c["n_nodes"]
    for key in ("parent", "first_child", "depth", "ball_count", "subtree_count"):
        np.testing.assert_array_equal(a_c[key][:m], a_p[key][:m], err_msg=key)
    np.testing.assert_array_equal(a_c["ball_node"], a_p["ball_node"])
    np.testing.assert_allclose(a_c["cdf"][:m], a_p["cdf"][:m], rtol=0, atol=0)


def test_env_switch_selects_pure_backend():
    code = (
        "import splitlab._backend as b; import numpy as np;"
        "from splitlab.trees import simulate_stats, default_params;"
        "from splitlab.splitters import binary_search_tree;"
        "spec = binary_search_tree(); p = default_params(spec);"
        "s = simulate_stats(p, spec, 80, 5, 3, purpose='test');"
        "print(b.backend_name()); print(s['path'].tolist()); print(s['wiener'].tolist())"
    )
    pure = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True, env={"SPLITLAB_PURE": "1", "PATH": "/usr/bin:/bin"},
    )
    assert pure.returncode == 0, pure.stderr
    lines = pure.stdout.strip().splitlines()
    assert lines[0] == "python"

    from splitlab.trees import simulate_stats
    from splitlab.splitters import binary_search_tree

    spec = binary_search_tree()
    sims = simulate_stats(default_params(spec), spec, 80, 5, 3, purpose="test")
    assert lines[1] == str(sims["path"].tolist())
    assert lines[2] == str(sims["wiener"].tolist())
