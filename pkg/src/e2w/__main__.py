import sys

from e2w.cli import main

sys.exit(main())
