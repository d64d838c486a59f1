import sys

from mixfield.cli import main

sys.exit(main())
