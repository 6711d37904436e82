"""Shared fixtures: real nlcsim outputs produced through its CLI."""

import json
import shutil
import subprocess
import sys

import pytest


def run_nlcsim(args, cwd):
    """Invoke the nlcsim command line (console script if installed)."""
    exe = shutil.which("nlcsim")
    if exe:
        cmd = [exe, *args]
    else:
        cmd = [sys.executable, "-c",
               "import sys; from nlcsim.io_cli import cli; sys.exit(cli(sys.argv[1:]))",
               *args]
    return subprocess.run(cmd, cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="session")
def sim_outputs(tmp_path_factory):
    """Small Taylor-Green and vortex-pair runs; returns their output paths."""
    root = tmp_path_factory.mktemp("simdata")
    out = {}
    for tag, init in (("tg", "taylor-green-uniform-d"), ("vp", "vortex-pair")):
        outdir = root / tag
        cfg = {
            "dim": 2, "n": 32, "nu": 0.1, "epsilon": 0.1, "dt": 1e-3,
            "t_end": 0.05, "save_every": 5, "snapshot_every": 25,
            "init": init, "model": "lc", "output_dir": str(outdir),
        }
        cfg_path = root / f"{tag}.json"
        cfg_path.write_text(json.dumps(cfg))
        proc = run_nlcsim(["run", "--config", str(cfg_path)], cwd=root)
        assert proc.returncode == 0, proc.stderr
        out[tag] = {"csv": outdir / "series.csv",
                    "snapshot": outdir / "final.nlc1"}
        assert out[tag]["csv"].exists()
        assert out[tag]["snapshot"].exists()
    return out
