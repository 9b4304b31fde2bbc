import sys

from src.infrastructure.cli.frap_cli import main

sys.exit(main())
