"""Regenerate the stand-in TEP series under data/.

Runs the closed-loop Tennessee Eastman simulator from the `tep-studio`
package (Ricker decentralized control, Mode 1) for 25 h at a 3-minute
sampling interval (500 rows). Faults 1..15 are switched on at t = 1 h.
The reactor agitator speed (XMV 12) is constant and is not written.

    pip install tep-studio
    python3 tools/generate_standin_data.py data/
"""

import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from tep_studio.ui.config import DisturbanceActivation, ScenarioConfig
from tep_studio.ui.service import run_scenario

HEADER = ",".join([f"xmeas_{i}" for i in range(1, 42)] + [f"xmv_{i}" for i in range(1, 12)])


def simulate(fault_id: int) -> tuple[int, bool, np.ndarray]:
    disturbances = () if fault_id == 0 else (DisturbanceActivation(idv=f"idv_{fault_id:02d}", start_time=1.0),)
    cfg = ScenarioConfig(
        name=f"fault_{fault_id}",
        loop_type="closed",
        horizon=25.0,
        control_interval=0.0005,
        record_every=100,
        seed=float(1000 + fault_id),
        disturbances=disturbances,
    )
    run = run_scenario(cfg)
    measured = [c for c in run.columns if c.startswith("measurement.")]
    manipulated = [c for c in run.columns if c.startswith("implemented_action.")][:11]
    rows = [[rec[c] for c in measured + manipulated] for rec in run.frame_records]
    return fault_id, run.terminated, np.array(rows)


def main() -> None:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    with ProcessPoolExecutor() as pool:
        for fault_id, terminated, rows in pool.map(simulate, range(16)):
            np.savetxt(out / f"fault_{fault_id}.csv", rows, delimiter=",", header=HEADER, comments="", fmt="%.10g")
            note = " (plant shutdown)" if terminated else ""
            print(f"fault {fault_id}: {rows.shape[0]} rows{note}")


if __name__ == "__main__":
    main()
