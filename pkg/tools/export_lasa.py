#!/usr/bin/env python3
"""One-off exporter: LASA handwriting .mat files -> the motion directory
convention used by `dsreshape bench`.

Usage:
    python tools/export_lasa.py /path/to/LASAHandwritingDataset/DataSet data/lasa

Each <name>.mat becomes data/lasa/<name>/ with motion.json (goal [0, 0])
and one CSV per demonstration (t, x1, x2, v1, v2). Requires scipy and the
dataset itself, which is distributed separately.
"""

import json
import sys
from pathlib import Path

import numpy as np
import scipy.io


def export_motion(mat_path: Path, out_root: Path):
    raw = scipy.io.loadmat(str(mat_path), squeeze_me=True, struct_as_record=False)
    demos = np.atleast_1d(raw["demos"])
    out_dir = out_root / mat_path.stem
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "motion.json").write_text(
        json.dumps({"name": mat_path.stem, "goal": [0.0, 0.0]}) + "\n")
    for i, d in enumerate(demos):
        pos = np.asarray(d.pos, dtype=float)      # (2, T)
        vel = np.asarray(d.vel, dtype=float)
        dt = float(np.asarray(d.dt))
        T = pos.shape[1]
        t = np.arange(T) * dt
        lines = ["t,x1,x2,v1,v2"]
        for k in range(T):
            lines.append(",".join(repr(float(v)) for v in
                                  (t[k], pos[0, k], pos[1, k], vel[0, k], vel[1, k])))
        (out_dir / f"demo{i}.csv").write_text("\n".join(lines) + "\n")
    return len(demos)


def main():
    if len(sys.argv) != 3:
        print(__doc__)
        return 2
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    mats = sorted(src.glob("*.mat"))
    if not mats:
        print(f"no .mat files under {src}")
        return 2
    for m in mats:
        n = export_motion(m, dst)
        print(f"{m.stem}: {n} demonstrations")
    return 0


if __name__ == "__main__":
    sys.exit(main())
