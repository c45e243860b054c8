#!/usr/bin/env python3
"""
Pipeline principal TCL.
Commandes pour générer les démonstrations, apprendre, transférer et évaluer.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.main import main


if __name__ == "__main__":
    sys.exit(main())
