"""Run ``python -m sfm_regkit``."""

import sys

from .cli import main

sys.exit(main())
