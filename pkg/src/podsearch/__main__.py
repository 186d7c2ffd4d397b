import sys

from podsearch.cli import main

sys.exit(main())
