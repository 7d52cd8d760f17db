import sys

from lcvsr.cli import main

sys.exit(main())
