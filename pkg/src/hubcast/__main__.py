"""Module entry point: python -m hubcast ..."""

import sys

from .cli import main

sys.exit(main())
