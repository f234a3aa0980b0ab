"""
The command line
================

The same steps run from the shell through ``llgm``. Here the commands are
driven from Python with ``llgm.cli.main``, which takes the argument list.
Each command writes its outputs and a ``run_manifest.json`` to its own
directory.
"""

import json
import tempfile
from pathlib import Path

from llgm.cli import main

out = Path(tempfile.mkdtemp(prefix="llgm-demo-"))

# llgm simulate --p 25 --n 150 --graph hub --seed 4 --output-dir sim
main(["simulate", "--p", "25", "--n", "150", "--graph", "hub", "--seed", "4",
      "--output-dir", str(out / "sim")])

# llgm fit --input sim/counts.tsv --subsamples 10 ...
main(["fit", "--input", str(out / "sim" / "counts.tsv"),
      "--subsamples", "10", "--path-length", "20", "--threads", "1",
      "--output-dir", str(out / "fit")])

# llgm evaluate --fit-dir fit --truth sim/truth_edges.tsv
main(["evaluate", "--fit-dir", str(out / "fit"), "--truth", str(out / "sim" / "truth_edges.tsv"),
      "--output-dir", str(out / "eval")])

print(sorted(p.name for p in (out / "fit").iterdir()))
print(json.loads((out / "eval" / "evaluation.json").read_text()))
print((out / "fit" / "edges.tsv").read_text().splitlines()[:4])
