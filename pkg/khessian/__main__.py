"""python -m khessian"""

import sys

from .cli import main

sys.exit(main())
