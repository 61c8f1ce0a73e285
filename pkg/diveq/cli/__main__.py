import sys

from diveq.cli.main import main

sys.exit(main())
