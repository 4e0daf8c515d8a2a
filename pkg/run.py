#!/usr/bin/env python3
"""
Find Your CAD Model - CAD retrieval and pose estimation
=======================================================

Generate a synthetic dataset, train the joint image/CAD embedding with pose
heads, then evaluate retrieval and 3D reconstruction quality.

Usage:
    # Full pipeline in one directory
    python run.py gen-data --out data/
    python run.py train --data data/ --out runs/demo --steps 3000
    python run.py eval --data data/ --checkpoint runs/demo/model.ckpt --split val --out runs/demo

    # Same commands through the installed entry point
    cad-model --help
"""

import sys

from find_your_cad_model.cli import main

if __name__ == "__main__":
    sys.exit(main())
