import sys

from sagin.cli import main

sys.exit(main())
