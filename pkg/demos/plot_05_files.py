"""
From a CSV file to a saved histogram and back
=============================================

The command line tool and the library share one document format. Here the
same pipeline runs through ``betatree.cli.main``.
"""

import json
import os
import tempfile

import numpy as np

from betatree.cli import main
from betatree.document import HistogramDocument, emit_plot_data
from betatree.harness import SCENARIO_2D, sample_mixture

tmp = tempfile.mkdtemp()
csv_path = os.path.join(tmp, "cells.csv")
np.savetxt(csv_path, sample_mixture(SCENARIO_2D, 2000, seed=7), delimiter=",",
           header="fsc,ssc", comments="", fmt="%.17g")

doc_path = os.path.join(tmp, "hist.json")
main(["build", csv_path, "--header", "--no-box", "--alpha", "0.1", "-o", doc_path])
main(["modes", "--doc", doc_path, "-o", doc_path])

doc = HistogramDocument.load(doc_path)
print(doc.n, doc.d, len(doc.bins), "bins; modes at", doc.modes["centers"])

# rectangles crossing the plane ssc = 0, ready for a plotting library
plane = emit_plot_data(doc, slice_axis=1, slice_value=0.0, density_floor=0.01)
print(json.dumps(plane["rectangles"][:2], indent=1))
