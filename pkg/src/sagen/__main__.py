import sys

from sagen.cli import main

sys.exit(main())
