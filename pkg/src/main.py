import sys

from .ui.cli_interface import main

if __name__ == "__main__":
    sys.exit(main())
