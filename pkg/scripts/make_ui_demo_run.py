#!/usr/bin/env python3
"""Build a small evaluation run for driving the annotation UI.

Filters the bundled dataset down to the single reasoning question that
references a mate-in-two puzzle, then runs ``harness eval --quality
reasoning`` against the scripted reference engine. The result is a run
directory with exactly two annotation tasks (the system plays two moves),
which is the smallest queue that exercises the full annotation flow:
pending -> scored -> aggregate recomputed.

Usage:  python3 scripts/make_ui_demo_run.py OUT_DIR

OUT_DIR must not already contain a run. The filtered dataset is written
inside OUT_DIR so the run is self-describing.
"""

import json
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
BUNDLED = REPO / "src" / "cogchess" / "data" / "dataset.json"
DEMO_PUZZLE = "mate-2-05"


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    out_dir = Path(sys.argv[1])
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = json.loads(BUNDLED.read_text(encoding="utf-8"))
    keep = [
        q
        for q in dataset["questions"]
        if q["quality"] == "reasoning" and q["payload"].get("puzzle_id") == DEMO_PUZZLE
    ]
    if len(keep) != 1:
        print(f"expected exactly one reasoning question for {DEMO_PUZZLE}, found {len(keep)}",
              file=sys.stderr)
        return 1
    dataset["questions"] = keep
    dataset_path = out_dir / "demo_dataset.json"
    dataset_path.write_text(json.dumps(dataset, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    run_dir = out_dir / "run"
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "cogchess.harness.cli",
            "eval",
            "--quality",
            "reasoning",
            "--dataset",
            str(dataset_path),
            "--out",
            str(run_dir),
        ],
        capture_output=True,
        text=True,
    )
    sys.stdout.write(proc.stdout)
    sys.stderr.write(proc.stderr)
    if proc.returncode != 0:
        return proc.returncode

    tasks = json.loads((run_dir / "tasks.json").read_text(encoding="utf-8"))["tasks"]
    if len(tasks) != 2:
        print(f"expected 2 annotation tasks, got {len(tasks)}", file=sys.stderr)
        return 1
    print(f"demo run ready: {run_dir} ({len(tasks)} tasks)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
