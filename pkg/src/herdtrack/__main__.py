import sys

from herdtrack.cli import main

sys.exit(main())
