import sys

from kdi.cli import main

sys.exit(main())
