import sys

from molcool.cli import main

sys.exit(main())
