import sys

from jrsp.cli import main

sys.exit(main())
