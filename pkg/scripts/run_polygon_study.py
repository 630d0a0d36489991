#!/usr/bin/env python3
"""Random-polygon F1-ratio study, desk scale by default.

Thin wrapper over the CLI's simulate command so the study can be launched
directly from a checkout. Desk scale (vertices 5/10/15, five polygons
each) finishes in minutes; --full runs the 26-vertex-count, 20-polygon
protocol and takes hours on a laptop.

Usage:
    python scripts/run_polygon_study.py --out-dir results/ [--full] [--jobs N]
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from svddpeak.cli import main

if __name__ == "__main__":
    sys.exit(main(["simulate", *sys.argv[1:]]))
