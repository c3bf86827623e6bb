#!/usr/bin/env python

"""
Run a refrigerator scenario, a steady-state solve, a percentile fit or a
percentile comparison from the command line
"""

import sys

from chiller.birch.cli import main

sys.exit(main())
