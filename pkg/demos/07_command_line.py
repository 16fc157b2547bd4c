"""
Command-line driver
===================

The ``nsdsav`` console script wraps the library. Here it is called
in-process; the same arguments work from a shell.
"""

import json
from pathlib import Path

from nsdsav.cli import main

out = Path(__file__).parent / "output" / "cli"

# One run from an inline JSON document, with snapshots every 5 steps.
config = {"scenario": "cavity", "dt": 0.01, "n_steps": 10, "h": 0.125, "stride": 5,
          "output_dir": str(out / "cavity")}
main(["run", "--config", json.dumps(config)])
report = json.loads((out / "cavity" / "report.json").read_text())
print("final r", report["final"]["r"], "snapshots", [s["file"] for s in report["snapshots"]])

# Energy residuals of an unforced run; exit code 3 would flag a violation.
print("energy exit code", main(["energy", "--steps", "10", "--output", str(out / "energy.csv")]))

# Invalid input gives a JSON error on stderr and exit code 2.
print("bad config exit code", main(["run", "--config", '{"dt": -1}']))
