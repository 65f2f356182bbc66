import sys

from qmix.cli import main

sys.exit(main())
