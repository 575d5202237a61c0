from __future__ import annotations

import sys

from fracdamp.cli import main

sys.exit(main())
