"""Regenerate the viewer test fixtures from the engine.

Produces, under frontend/test/fixtures/:
  minicity_cube.stc   the seed-42 mini-city cube artifact
  expectations.json   engine-side values the viewer must reproduce:
                      the 95th-percentile threshold, 20 sampled voxel values
                      as exact float32 bit patterns, and the hour-6 slice
                      triples from the canonical cube file.

Run from the repository root:  python3 frontend/scripts/make_fixtures.py
"""
import json
import os
import shutil
import struct
import sys
import tempfile

import numpy as np

from accesscube import minicity, pipeline
from accesscube.cube import percentile, read_cube

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "test", "fixtures")


def float32_bits(v: float) -> int:
    return struct.unpack("<I", struct.pack("<f", v))[0]


def main() -> None:
    os.makedirs(FIXTURES, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        mc = minicity.generate(tmp, seed=42)
        cfg = pipeline.RunConfig.from_file(mc.config)
        pipeline.run_pipeline(cfg)
        cube_path = cfg.out(pipeline.CUBE_FILE)
        shutil.copy(cube_path, os.path.join(FIXTURES, "minicity_cube.stc"))

        cube = read_cube(cube_path)  # float32-quantized values, like the viewer sees
        rng = np.random.default_rng(2718)
        valid = np.argwhere(np.isfinite(cube.values))
        picks = valid[rng.choice(len(valid), size=20, replace=False)]
        samples = [
            {
                "x": int(x),
                "y": int(y),
                "t": int(t),
                "bits": float32_bits(float(cube.values[t, y, x])),
            }
            for t, y, x in picks
        ]

        slice6 = []
        layer = cube.values[6]
        for row in range(layer.shape[0]):
            for col in range(layer.shape[1]):
                if np.isfinite(layer[row, col]):
                    slice6.append([col, row, float(layer[row, col])])

        expectations = {
            "percentile_95": percentile(cube, 95.0),
            "sample_voxels": samples,
            "slice_hour": 6,
            "slice_triples": slice6,
        }
        with open(os.path.join(FIXTURES, "expectations.json"), "w", encoding="utf-8") as f:
            json.dump(expectations, f, indent=1)
            f.write("\n")
    print(f"fixtures written to {os.path.normpath(FIXTURES)}")


if __name__ == "__main__":
    sys.exit(main())
